//! Normalized JSONL dataset format, bundled fixtures and instance
//! classification.

mod classify;
mod fixtures;
mod jsonl;

pub use classify::{classify, Classification};
pub use fixtures::{fixture, fixtures, FIXTURES_JSONL};
pub use jsonl::{
    dump_instances, load_instances, parse_instances, record_line, FORMAT_VERSION,
};

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::demo::build_demo_db;

/// Dataset whose depth-1 instances are dropped at load time.
pub const ENTAILMENT_BANK: &str = "entailmentbank";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    /// Longest gold proof depth in the dataset; drives the iteration cap.
    pub max_depth: u32,
    /// Split name to JSONL path.
    #[serde(default)]
    pub splits: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: invalid gold proof: {message}")]
    InvalidGold { line: usize, message: String },
    #[error("instance `{0}` has no gold proof")]
    NoGold(String),
    #[error("unknown split `{0}`")]
    UnknownSplit(String),
}
