use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::instance::{Demonstration, Instance};
use crate::llm::{extract_marker, extract_steps, render_prompt, ChatExchange, LlmClient, LlmError, PromptExtras, PromptKind};
use crate::proof::{NodeId, ProofGraph, ProofStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Guessed,
    Constructed,
}

/// The current estimate of the target proof's shape.
#[derive(Debug, Clone, PartialEq)]
pub struct GuessedGraph {
    graph: ProofGraph,
    provenance: Vec<Provenance>,
}

impl GuessedGraph {
    fn all_guessed(graph: ProofGraph) -> Self {
        let provenance = vec![Provenance::Guessed; graph.len()];
        Self { graph, provenance }
    }

    pub fn graph(&self) -> &ProofGraph {
        &self.graph
    }

    /// One tag per step of [`Self::graph`].
    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn guessed_steps(&self) -> impl Iterator<Item = &ProofStep> {
        self.graph.steps().iter().zip(&self.provenance).filter(|(_, p)| **p == Provenance::Guessed).map(|(s, _)| s)
    }

    /// Overlays `constructed` on this guess. Constructed steps come first;
    /// a guessed step survives only if its conclusion is not already built
    /// and all its intermediate premises are still derivable.
    pub fn merge(&self, constructed: &ProofGraph) -> GuessedGraph {
        let mut steps: Vec<ProofStep> = constructed.steps().to_vec();
        let mut provenance = vec![Provenance::Constructed; steps.len()];
        let mut concluded: BTreeSet<NodeId> = steps.iter().map(ProofStep::conclusion).collect();
        for step in self.guessed_steps() {
            if concluded.contains(&step.conclusion()) {
                continue;
            }
            let derivable =
                step.premises().iter().all(|p| p.is_sentence() || concluded.contains(p));
            if derivable {
                concluded.insert(step.conclusion());
                steps.push(step.clone());
                provenance.push(Provenance::Guessed);
            }
        }
        let graph = ProofGraph::new(steps).expect("merge preserves validity");
        GuessedGraph { graph, provenance }
    }
}

/// Two-step balanced guess over the first four context sentences (fewer
/// when the context is smaller).
pub fn fallback_guess(inst: &Instance) -> GuessedGraph {
    let ids: Vec<NodeId> = inst.sentence_ids().take(4).collect();
    let step = |premises: &[NodeId], conclusion| ProofStep::new(premises.to_vec(), conclusion, "").ok();
    let steps: Vec<ProofStep> = match ids.len() {
        0 => Vec::new(),
        1..=3 => step(&ids, NodeId::int(1)).into_iter().collect(),
        _ => [step(&ids[..2], NodeId::int(1)), step(&ids[2..], NodeId::int(2))].into_iter().flatten().collect(),
    };
    GuessedGraph::all_guessed(ProofGraph::new(steps).expect("fallback is valid"))
}

/// Builds the guessed graph for one search state. With no prior and nothing
/// constructed the model is asked once for a full proof; a reply that does
/// not parse into a valid graph falls back to [`fallback_guess`]. Otherwise
/// the prior (or nothing) is merged with `constructed`. Never fails.
pub fn guess_graph(
    prior: Option<&GuessedGraph>,
    constructed: &ProofGraph,
    client: &dyn LlmClient,
    inst: &Instance,
    demos: &[&Demonstration],
) -> GuessedGraph {
    match prior {
        Some(p) => p.merge(constructed),
        None if !constructed.is_empty() => GuessedGraph::all_guessed(ProofGraph::empty()).merge(constructed),
        None => {
            let guess = ask(client, inst, demos).unwrap_or_else(|| {
                warn!(instance = %inst.id, "guessed proof unusable, using fallback");
                fallback_guess(inst)
            });
            debug!(instance = %inst.id, steps = guess.graph.len(), "initial guess");
            guess
        }
    }
}

fn ask(client: &dyn LlmClient, inst: &Instance, demos: &[&Demonstration]) -> Option<GuessedGraph> {
    let exchange = guess_exchange(inst, demos).ok()?;
    match client.complete(&exchange) {
        Ok(reply) => guess_from_reply(inst, reply.texts.first()?),
        Err(e) => {
            warn!(error = %e, "guess call failed");
            None
        }
    }
}

/// The prompt asking for a full proof of `inst`.
pub fn guess_exchange(inst: &Instance, demos: &[&Demonstration]) -> Result<ChatExchange, LlmError> {
    render_prompt(PromptKind::GuessProof, inst, demos, &PromptExtras::default())
}

/// Parses a guessed proof out of a reply. Steps over unknown sentences are
/// discarded; `None` when what remains is not a non-empty valid graph.
pub fn guess_from_reply(inst: &Instance, text: &str) -> Option<GuessedGraph> {
    let steps = extract_steps(extract_marker(text, "Proof:")).steps;
    let steps: Vec<ProofStep> =
        steps.into_iter().filter(|s| s.premises().iter().all(|p| !p.is_sentence() || inst.sentence(*p).is_some())).collect();
    let graph = ProofGraph::new(steps).ok().filter(|g| !g.is_empty())?;
    Some(GuessedGraph::all_guessed(graph))
}
