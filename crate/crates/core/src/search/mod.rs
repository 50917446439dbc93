//! Iterative proof construction: breadth-first over iterations, beam-limited
//! per expansion, with per-branch hints and structure-aware pruning.

mod engine;
mod prune;
mod trace;

pub use engine::{extend, reached_hypothesis, run_search, run_search_with, CallBudget, SearchOutcome, SearchState};
pub use prune::{prune, PruneRule, Pruned};
pub use trace::{read_trace, write_trace, PrunedStep, TraceError, TraceEvent, TraceRecord};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{LlmError, PromptKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pruning {
    #[default]
    Div,
    ReuseIc,
    Off,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HintMode {
    #[default]
    Hint,
    WhatsNext,
    Off,
}

/// Sampling temperature per prompt kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Temperatures {
    pub guess_proof: f64,
    pub retrieve: f64,
    pub propose: f64,
    pub evaluate: f64,
    pub hint: f64,
}

impl Default for Temperatures {
    fn default() -> Self {
        Self { guess_proof: 0.7, retrieve: 0.7, propose: 0.7, evaluate: 0.0, hint: 0.7 }
    }
}

impl Temperatures {
    pub fn get(&self, kind: PromptKind) -> f64 {
        match kind {
            PromptKind::GuessProof => self.guess_proof,
            PromptKind::Retrieve => self.retrieve,
            PromptKind::Propose => self.propose,
            PromptKind::Evaluate => self.evaluate,
            PromptKind::Hint => self.hint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub beam_b: usize,
    /// Proposals requested per expanded state.
    pub proposals_per_node: usize,
    /// Independent retrieval samples, unioned.
    pub retrieval_samples: usize,
    pub demos_k: usize,
    pub max_iter_multiplier: usize,
    pub max_depth: usize,
    /// States expanded per iteration; defaults to `beam_b`.
    pub frontier_a: Option<usize>,
    pub pruning: Pruning,
    pub hint_mode: HintMode,
    pub temperatures: Temperatures,
    pub model: String,
    pub max_tokens: u32,
    /// Score used when an evaluation reply has no number.
    pub default_score: u8,
    /// Cap on model calls for one instance.
    pub max_calls: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            beam_b: 3,
            proposals_per_node: 3,
            retrieval_samples: 5,
            demos_k: 3,
            max_iter_multiplier: 5,
            max_depth: 4,
            frontier_a: None,
            pruning: Pruning::Div,
            hint_mode: HintMode::Hint,
            temperatures: Temperatures::default(),
            model: crate::llm::ChatParams::default().model,
            max_tokens: 512,
            default_score: 50,
            max_calls: None,
        }
    }
}

impl SearchConfig {
    pub fn max_iterations(&self) -> usize {
        self.max_iter_multiplier * self.max_depth
    }

    pub fn frontier(&self) -> usize {
        self.frontier_a.unwrap_or(self.beam_b)
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let counts = [
            ("beam_b", self.beam_b),
            ("proposals_per_node", self.proposals_per_node),
            ("retrieval_samples", self.retrieval_samples),
            ("demos_k", self.demos_k),
            ("frontier_a", self.frontier()),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(SearchError::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.default_score > 99 {
            return Err(SearchError::InvalidConfig("default_score must be in 0..=99".into()));
        }
        if self.max_calls == Some(0) {
            return Err(SearchError::InvalidConfig("max_calls must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetScope {
    Instance,
    Global,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("instance `{0}` has no context sentences")]
    EmptyContext(String),
    #[error("{scope:?} call budget of {limit} exhausted")]
    BudgetExceeded { scope: BudgetScope, limit: usize, partial: Box<SearchOutcome> },
    #[error("model call failed: {source}")]
    Llm {
        #[source]
        source: LlmError,
        partial: Box<SearchOutcome>,
    },
}

impl SearchError {
    /// Whatever was done before the failure, when there is any.
    pub fn partial(&self) -> Option<&SearchOutcome> {
        match self {
            SearchError::BudgetExceeded { partial, .. } | SearchError::Llm { partial, .. } => Some(partial),
            _ => None,
        }
    }
}
