//! Total extractors over raw model output. None of these panic; failures are
//! typed and recoverable.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;
use tracing::debug;

use crate::proof::{parse_step_line, NodeId, ProofStep};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no usable sentence identifiers in reply")]
    EmptyExtraction,
    #[error("no score in reply")]
    NoScore,
}

fn sent_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bsent\s?(\d+)\b").unwrap())
}

fn node_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:sent\s?\d+|int\s?\d+|hypothesis)\b").unwrap())
}

fn finish_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bfinish\b").unwrap())
}

fn int_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b\d+\b").unwrap())
}

/// Sentence identifiers mentioned in `text` that exist in `context`.
pub fn extract_retrieval(text: &str, context: &BTreeMap<u32, String>) -> Result<BTreeSet<NodeId>, ExtractError> {
    let found: BTreeSet<NodeId> = sent_re()
        .captures_iter(text)
        .filter_map(|c| c[1].parse::<u32>().ok())
        .filter(|i| context.contains_key(i))
        .map(NodeId::Sentence)
        .collect();
    if found.is_empty() {
        Err(ExtractError::EmptyExtraction)
    } else {
        Ok(found)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepExtraction {
    pub steps: Vec<ProofStep>,
    pub finish: bool,
}

/// Every parseable step in `text`, scanning each line and each `;` segment.
/// Leading chatter such as `Possible Next Reasoning:` is skipped.
pub fn extract_steps(text: &str) -> StepExtraction {
    let mut out = StepExtraction::default();
    for segment in text.lines().flat_map(|l| l.split(';')) {
        let arrow = match segment.find("->").or_else(|| segment.find('→')) {
            Some(a) => a,
            None => continue,
        };
        let start = match node_re().find(&segment[..arrow]) {
            Some(m) => m.start(),
            None => {
                debug!(segment, "no premise before arrow");
                continue;
            }
        };
        match parse_step_line(segment[start..].trim()) {
            Ok(step) => {
                out.finish |= step.concludes_hypothesis();
                out.steps.push(step);
            }
            Err(e) => debug!(segment, error = %e, "skipping unparseable step"),
        }
    }
    out.finish |= finish_re().is_match(text);
    out
}

/// An evaluation score in 0..=99. `clamped` records that the raw value was
/// out of range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Score {
    pub value: u8,
    pub clamped: bool,
}

/// The last standalone integer in `text`, clamped to 0..=99. A minus sign
/// counts only when it is not part of a range like `85-99`.
pub fn extract_score(text: &str) -> Result<Score, ExtractError> {
    let m = int_re().find_iter(text).last().ok_or(ExtractError::NoScore)?;
    let before = &text[..m.start()];
    let negative = before.ends_with('-') && !before[..before.len() - 1].ends_with(|c: char| c.is_alphanumeric());
    if negative {
        return Ok(Score { value: 0, clamped: m.as_str().bytes().any(|b| b != b'0') });
    }
    let digits = m.as_str().trim_start_matches('0');
    let raw: u64 = if digits.len() > 3 { u64::MAX } else { digits.parse().unwrap_or(0) };
    Ok(Score { value: raw.min(99) as u8, clamped: raw > 99 })
}

/// Text after the first `marker`, or the whole trimmed text when the marker
/// is absent.
pub fn extract_marker<'a>(text: &'a str, marker: &str) -> &'a str {
    match text.find(marker) {
        Some(i) => text[i + marker.len()..].trim(),
        None => text.trim(),
    }
}

pub fn extract_hint(text: &str) -> &str {
    extract_marker(text, "Missing:")
}
