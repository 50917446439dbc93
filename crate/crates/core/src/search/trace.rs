//! Line-delimited engine event log.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::PruneRule;
use crate::proof::NodeId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedStep {
    pub step: String,
    pub score: u8,
    pub rule: PruneRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    DemoSelected {
        guessed: String,
        demos: Vec<(String, f64)>,
    },
    Retrieved {
        sentences: Vec<NodeId>,
        failed_samples: usize,
    },
    Proposed {
        steps: Vec<String>,
        finish: bool,
        rejected: Vec<String>,
    },
    Evaluated {
        step: String,
        score: u8,
        defaulted: bool,
    },
    Pruned {
        kept: Vec<(String, u8)>,
        removed: Vec<PrunedStep>,
        guard_fired: bool,
    },
    Hint {
        node: NodeId,
        text: String,
    },
    Extended {
        step: String,
        child: String,
    },
    Dropped {
        reason: String,
        count: usize,
    },
    Terminated {
        reached: bool,
        proof: Option<String>,
        nested: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub trace_id: String,
    pub iter: usize,
    #[serde(flatten)]
    pub event: TraceEvent,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trace at byte {offset}: {message}")]
    MalformedTrace { offset: u64, message: String },
}

pub fn write_trace(mut out: impl Write, records: &[TraceRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads a trace written by [`write_trace`]. A record that does not parse,
/// including a truncated final line, is reported with its byte offset.
pub fn read_trace(mut input: impl BufRead) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records = Vec::new();
    let mut offset = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let n = input.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        if !line.trim().is_empty() {
            let record = serde_json::from_str(line.trim_end())
                .map_err(|e| TraceError::MalformedTrace { offset, message: e.to_string() })?;
            records.push(record);
        }
        offset += n as u64;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_truncation() {
        let records = vec![
            TraceRecord {
                trace_id: "0".into(),
                iter: 0,
                event: TraceEvent::Retrieved { sentences: vec![NodeId::sent(4)], failed_samples: 1 },
            },
            TraceRecord {
                trace_id: "0".into(),
                iter: 1,
                event: TraceEvent::Pruned {
                    kept: vec![("sent1 & sent2 -> int1".into(), 90)],
                    removed: vec![PrunedStep { step: "int1 & sent3 -> int2".into(), score: 80, rule: PruneRule::Div }],
                    guard_fired: false,
                },
            },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().next().unwrap().contains(r#""event":"retrieved""#));
        assert_eq!(read_trace(&buf[..]).unwrap(), records);

        let first_len = text.find('\n').unwrap() as u64 + 1;
        let cut = &buf[..buf.len() - 10];
        match read_trace(cut) {
            Err(TraceError::MalformedTrace { offset, .. }) => assert_eq!(offset, first_len),
            other => panic!("{other:?}"),
        }
    }
}
