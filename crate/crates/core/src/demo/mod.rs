//! Structure-aware demonstration selection.

mod encoder;
mod guess;
mod select;

pub use encoder::{encode_graph, similarity, GraphEmbedding, GraphEncoder, StructuralEncoder, CONTENT_DIM, CONTENT_WEIGHT, STRUCTURE_DIM};
pub(crate) use encoder::Fnv;
pub use guess::{fallback_guess, guess_exchange, guess_from_reply, guess_graph, GuessedGraph, Provenance};
pub use select::{build_demo_db, DemoDb, ScoredDemo};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DemoError {
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}
