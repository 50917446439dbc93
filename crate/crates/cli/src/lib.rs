//! Batch harness around the proof-search engine: run, score, inspect and
//! convert.

pub mod config;
pub mod convert;
pub mod inspect;
pub mod results;
pub mod run;
pub mod score;

use std::fmt;

/// Bad flags or an invalid configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_EXHAUSTED: u8 = 3;

/// Exit code for a failed command: usage problems are 1, everything else
/// (unreadable or invalid inputs) is a data error.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}
