//! Structure-aware proof-graph construction with prompted language models.

pub mod datasets;
pub mod demo;
pub mod instance;
pub mod llm;
pub mod metrics;
pub mod proof;
pub mod search;

pub use instance::{Demonstration, Instance, InstanceMeta};
pub use proof::{NodeId, NodeKind, ProofError, ProofGraph, ProofStep};
pub use search::{run_search, SearchConfig, SearchOutcome};
