//! Proof graph types and the two textual proof notations.

mod chain;
mod graph;
mod nested;
mod node;
mod step;

pub use chain::{parse_proof_chain, parse_step_line, serialize_chain};
pub use graph::ProofGraph;
pub use nested::{parse_nested_proof, serialize_nested};
pub use node::{NodeId, NodeKind};
pub use step::ProofStep;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("step has no `->`")]
    MissingArrow,
    #[error("bad node token `{0}`")]
    BadNode(String),
    #[error("a sentence cannot be a conclusion: {0}")]
    SentenceConclusion(NodeId),
    #[error("step has no premises")]
    EmptyPremises,
    #[error("duplicate premise {0}")]
    DuplicatePremise(NodeId),
    #[error("`hypothesis` cannot be a premise")]
    HypothesisPremise,
    #[error("{0} is concluded more than once")]
    DuplicateConclusion(NodeId),
    #[error("{0} is used before it is concluded")]
    ForwardReference(NodeId),
    #[error("{0} is never concluded")]
    UnknownPremise(NodeId),
    #[error("cycle through {0}")]
    CycleDetected(NodeId),
    #[error("{0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("unbalanced parentheses")]
    UnbalancedParens,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expression contains no reasoning step")]
    EmptyProof,
}
