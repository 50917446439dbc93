use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ProofError;

/// Identifier of a node in a proof graph.
///
/// Renders as `sentN`, `intN` or `hypothesis`. Indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum NodeId {
    Sentence(u32),
    Intermediate(u32),
    Hypothesis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Sentence,
    Intermediate,
    Hypothesis,
}

impl NodeId {
    pub fn sent(index: u32) -> Self {
        assert!(index >= 1, "sentence indices start at 1");
        NodeId::Sentence(index)
    }

    pub fn int(index: u32) -> Self {
        assert!(index >= 1, "intermediate indices start at 1");
        NodeId::Intermediate(index)
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            NodeId::Sentence(_) => NodeKind::Sentence,
            NodeId::Intermediate(_) => NodeKind::Intermediate,
            NodeId::Hypothesis => NodeKind::Hypothesis,
        }
    }

    pub fn index(&self) -> Option<u32> {
        match *self {
            NodeId::Sentence(i) | NodeId::Intermediate(i) => Some(i),
            NodeId::Hypothesis => None,
        }
    }

    pub fn is_sentence(&self) -> bool {
        matches!(self, NodeId::Sentence(_))
    }

    pub fn is_intermediate(&self) -> bool {
        matches!(self, NodeId::Intermediate(_))
    }

    pub fn is_hypothesis(&self) -> bool {
        matches!(self, NodeId::Hypothesis)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Sentence(i) => write!(f, "sent{i}"),
            NodeId::Intermediate(i) => write!(f, "int{i}"),
            NodeId::Hypothesis => f.write_str("hypothesis"),
        }
    }
}

impl FromStr for NodeId {
    type Err = ProofError;

    /// Case-insensitive; tolerates whitespace between the prefix and the index
    /// (`sent 4`), which shows up in model output.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let token = s.trim();
        let lower = token.to_ascii_lowercase();
        if lower == "hypothesis" {
            return Ok(NodeId::Hypothesis);
        }
        let bad = || ProofError::BadNode(token.to_string());
        let (rest, make): (&str, fn(u32) -> NodeId) = if let Some(rest) = lower.strip_prefix("sent") {
            (rest, NodeId::Sentence)
        } else if let Some(rest) = lower.strip_prefix("int") {
            (rest, NodeId::Intermediate)
        } else {
            return Err(bad());
        };
        let digits = rest.trim_start();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        match digits.parse::<u32>() {
            Ok(0) | Err(_) => Err(bad()),
            Ok(i) => Ok(make(i)),
        }
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> String {
        id.to_string()
    }
}

impl TryFrom<String> for NodeId {
    type Error = ProofError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_canonical_tokens() {
        assert_eq!(NodeId::sent(7).to_string(), "sent7");
        assert_eq!(NodeId::int(1).to_string(), "int1");
        assert_eq!(NodeId::Hypothesis.to_string(), "hypothesis");
    }

    #[test]
    fn parses_case_and_space_insensitive() {
        assert_eq!("SENT12".parse::<NodeId>().unwrap(), NodeId::sent(12));
        assert_eq!(" int 3 ".parse::<NodeId>().unwrap(), NodeId::int(3));
        assert_eq!("Hypothesis".parse::<NodeId>().unwrap(), NodeId::Hypothesis);
    }

    #[test]
    fn rejects_zero_and_garbage() {
        for bad in ["sent0", "int", "sentence4", "s4", "int-1", "", "hyp"] {
            assert!(matches!(bad.parse::<NodeId>(), Err(ProofError::BadNode(_))), "{bad}");
        }
    }

    #[test]
    fn orders_sentences_before_intermediates() {
        let mut ids = vec![NodeId::Hypothesis, NodeId::int(1), NodeId::sent(20), NodeId::sent(4)];
        ids.sort();
        assert_eq!(ids, vec![NodeId::sent(4), NodeId::sent(20), NodeId::int(1), NodeId::Hypothesis]);
    }
}
