use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use super::{NodeId, ProofError};

/// One deduction `premises -> conclusion`.
///
/// Equality and hashing treat the premises as a set and ignore the
/// conclusion text: `sent4 & sent7` and `sent7 & sent4` are the same step.
#[derive(Debug, Clone)]
pub struct ProofStep {
    premises: Vec<NodeId>,
    conclusion: NodeId,
    text: String,
}

impl ProofStep {
    pub fn new(
        premises: Vec<NodeId>,
        conclusion: NodeId,
        text: impl Into<String>,
    ) -> Result<Self, ProofError> {
        if premises.is_empty() {
            return Err(ProofError::EmptyPremises);
        }
        if conclusion.is_sentence() {
            return Err(ProofError::SentenceConclusion(conclusion));
        }
        let mut seen = BTreeSet::new();
        for p in &premises {
            if p.is_hypothesis() {
                return Err(ProofError::HypothesisPremise);
            }
            if *p == conclusion {
                return Err(ProofError::CycleDetected(conclusion));
            }
            if !seen.insert(*p) {
                return Err(ProofError::DuplicatePremise(*p));
            }
        }
        Ok(Self { premises, conclusion, text: text.into() })
    }

    pub fn premises(&self) -> &[NodeId] {
        &self.premises
    }

    pub fn premise_set(&self) -> BTreeSet<NodeId> {
        self.premises.iter().copied().collect()
    }

    pub fn conclusion(&self) -> NodeId {
        self.conclusion
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn concludes_hypothesis(&self) -> bool {
        self.conclusion.is_hypothesis()
    }

    pub fn uses_intermediate(&self) -> bool {
        self.premises.iter().any(NodeId::is_intermediate)
    }

    /// Sum of premise indices, used as a deterministic tiebreak.
    pub fn premise_index_sum(&self) -> u64 {
        self.premises.iter().filter_map(NodeId::index).map(u64::from).sum()
    }

    pub(crate) fn with_conclusion(&self, conclusion: NodeId) -> Self {
        Self { premises: self.premises.clone(), conclusion, text: self.text.clone() }
    }

    pub(crate) fn map_nodes(&self, f: impl Fn(NodeId) -> NodeId) -> Self {
        Self {
            premises: self.premises.iter().map(|&p| f(p)).collect(),
            conclusion: f(self.conclusion),
            text: self.text.clone(),
        }
    }
}

impl PartialEq for ProofStep {
    fn eq(&self, other: &Self) -> bool {
        self.conclusion == other.conclusion && self.premise_set() == other.premise_set()
    }
}

impl Eq for ProofStep {}

impl Hash for ProofStep {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.conclusion.hash(state);
        self.premise_set().hash(state);
    }
}

/// Renders the step as a chain-DSL line. Characters that would break the
/// line structure (`;` and newlines) are replaced in the conclusion text.
impl fmt::Display for ProofStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.premises.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, " -> {}", self.conclusion)?;
        let text = self.text.trim();
        if !text.is_empty() {
            let clean: String = text
                .chars()
                .map(|c| match c {
                    ';' => ',',
                    '\n' | '\r' => ' ',
                    c => c,
                })
                .collect();
            write!(f, ": {clean}")?;
        }
        Ok(())
    }
}
