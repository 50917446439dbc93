//! The `;`-separated chain notation:
//! `sent20 & sent4 -> int1: text; int1 & int2 -> hypothesis;`

use super::{NodeId, ProofError, ProofGraph, ProofStep};

const ARROWS: [&str; 2] = ["->", "→"];

fn split_arrow(text: &str) -> Option<(&str, &str)> {
    ARROWS
        .iter()
        .filter_map(|a| text.find(a).map(|i| (i, a.len())))
        .min_by_key(|&(i, _)| i)
        .map(|(i, len)| (&text[..i], &text[i + len..]))
}

/// Parses one step line such as `sent20 & sent4 -> int1: some conclusion`.
pub fn parse_step_line(text: &str) -> Result<ProofStep, ProofError> {
    let (lhs, rhs) = split_arrow(text).ok_or(ProofError::MissingArrow)?;
    let premises = lhs
        .split('&')
        .map(str::parse::<NodeId>)
        .collect::<Result<Vec<_>, _>>()?;
    let (token, conclusion_text) = match rhs.split_once(':') {
        Some((token, rest)) => (token, rest.trim()),
        None => (rhs, ""),
    };
    let conclusion: NodeId = token.parse()?;
    ProofStep::new(premises, conclusion, conclusion_text)
}

/// Parses a `;`-separated chain of step lines into a validated graph.
pub fn parse_proof_chain(text: &str) -> Result<ProofGraph, ProofError> {
    let steps = text
        .split(';')
        .map(str::trim)
        .filter(|line| !line.is_empty())
        .map(parse_step_line)
        .collect::<Result<Vec<_>, _>>()?;
    ProofGraph::new(steps)
}

/// Renders a graph in chain notation, steps in their stored (topological)
/// order joined by `"; "`.
pub fn serialize_chain(graph: &ProofGraph) -> String {
    graph.steps().iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proof::testing::{mars, MARS_CHAIN};

    #[test]
    fn parses_step_with_text() {
        let step =
            parse_step_line("sent20 & sent4 -> int1: gravity causes the planets in the solar system to orbit the sun")
                .unwrap();
        assert_eq!(step.premises(), &[NodeId::sent(20), NodeId::sent(4)]);
        assert_eq!(step.conclusion(), NodeId::int(1));
        assert_eq!(step.text(), "gravity causes the planets in the solar system to orbit the sun");
    }

    #[test]
    fn parses_hypothesis_step_without_text() {
        let step = parse_step_line("int1 & int2 -> hypothesis").unwrap();
        assert_eq!(step.premises(), &[NodeId::int(1), NodeId::int(2)]);
        assert_eq!(step.conclusion(), NodeId::Hypothesis);
        assert_eq!(step.text(), "");
    }

    #[test]
    fn step_line_errors() {
        assert_eq!(parse_step_line("sent3 and sent4 give int2").unwrap_err(), ProofError::MissingArrow);
        assert!(matches!(parse_step_line("sent3 & fact4 -> int2"), Err(ProofError::BadNode(_))));
        assert_eq!(
            parse_step_line("sent3 & sent4 -> sent5").unwrap_err(),
            ProofError::SentenceConclusion(NodeId::sent(5))
        );
    }

    #[test]
    fn whitespace_and_case_tolerant() {
        let step = parse_step_line("  SENT3&Sent4   ->INT2 :  x ").unwrap();
        assert_eq!(step.premises(), &[NodeId::sent(3), NodeId::sent(4)]);
        assert_eq!(step.conclusion(), NodeId::int(2));
        assert_eq!(step.text(), "x");
    }

    #[test]
    fn parses_mars_chain() {
        let g = parse_proof_chain(MARS_CHAIN).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.leaves().len(), 4);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn empty_chain_is_empty_graph() {
        assert!(parse_proof_chain("").unwrap().is_empty());
        assert!(parse_proof_chain(" ; ").unwrap().is_empty());
    }

    #[test]
    fn self_premise_is_rejected() {
        assert!(parse_proof_chain("int1 & sent2 -> int1").is_err());
    }

    #[test]
    fn chain_errors() {
        assert_eq!(
            parse_proof_chain("int2 & sent1 -> int1; sent2 & sent3 -> int2").unwrap_err(),
            ProofError::ForwardReference(NodeId::int(2))
        );
        assert_eq!(
            parse_proof_chain("sent1 & sent2 -> int1; sent2 & sent3 -> int1").unwrap_err(),
            ProofError::DuplicateConclusion(NodeId::int(1))
        );
    }

    #[test]
    fn serialize_renders_steps() {
        assert_eq!(serialize_chain(&ProofGraph::empty()), "");
        let g = parse_proof_chain("sent1 & sent2 -> int1: text").unwrap();
        assert_eq!(serialize_chain(&g), "sent1 & sent2 -> int1: text");
    }

    #[test]
    fn mars_round_trip() {
        let g = mars();
        let text = serialize_chain(&g);
        let back = parse_proof_chain(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(serialize_chain(&back), text);
    }

    #[test]
    fn unicode_arrow_accepted() {
        let step = parse_step_line("sent7 & sent4 → int1").unwrap();
        assert_eq!(step.conclusion(), NodeId::int(1));
    }
}
