//! Per-instance outcome records, one JSON object per line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use strucprove::proof::{parse_proof_chain, ProofGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Proved,
    Unproved,
    BudgetExceeded,
    LlmError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub status: Status,
    /// Chain notation; absent unless the hypothesis was reached.
    pub proof: Option<String>,
    pub llm_calls: usize,
    pub explored_states: usize,
    pub iterations: usize,
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ResultRecord {
    pub fn proof_graph(&self) -> Result<Option<ProofGraph>> {
        self.proof
            .as_deref()
            .map(|p| parse_proof_chain(p).with_context(|| format!("{}: stored proof does not parse", self.id)))
            .transpose()
    }

    /// The batch-level failure this record signals, if any.
    pub fn is_exhaustion(&self) -> bool {
        matches!(self.status, Status::BudgetExceeded | Status::LlmError)
    }
}

/// Reads a results file. A torn final line (interrupted write) is dropped
/// and the file truncated so appends start on a clean boundary.
pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut records = Vec::new();
    let mut good_bytes = 0u64;
    let mut lines = BufReader::new(file).lines().enumerate().peekable();
    while let Some((i, line)) = lines.next() {
        let line = line?;
        let last = lines.peek().is_none();
        match serde_json::from_str::<ResultRecord>(&line) {
            Ok(r) => {
                records.push(r);
                good_bytes += line.len() as u64 + 1;
            }
            Err(e) if last => {
                tracing::warn!(line = i + 1, error = %e, "dropping torn final results record");
                OpenOptions::new().write(true).open(path)?.set_len(good_bytes)?;
            }
            Err(e) => return Err(e).with_context(|| format!("{}: line {}", path.display(), i + 1)),
        }
    }
    Ok(records)
}

pub struct ResultsWriter {
    file: File,
}

impl ResultsWriter {
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        Ok(Self { file })
    }

    pub fn write(&mut self, record: &ResultRecord) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}
