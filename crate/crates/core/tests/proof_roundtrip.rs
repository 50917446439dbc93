//! Chain-notation round trips over random graphs, and totality of the
//! parsers on corrupted input.

#[path = "support/graphs.rs"]
mod graphs;

use graphs::{arb_graph, check_valid, corrupt};
use proptest::prelude::*;
use strucprove::proof::{parse_nested_proof, parse_proof_chain, serialize_chain, NodeId, ProofGraph};

fn assert_valid(g: &ProofGraph) {
    check_valid(g).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn chain_round_trip(g in arb_graph()) {
        let text = serialize_chain(&g);
        let back = parse_proof_chain(&text).unwrap();
        prop_assert_eq!(&back, &g);
        for (a, b) in back.steps().iter().zip(g.steps()) {
            prop_assert_eq!(a.premises(), b.premises());
            prop_assert_eq!(a.conclusion(), b.conclusion());
            prop_assert_eq!(a.text(), b.text());
        }
        prop_assert_eq!(serialize_chain(&back), text);
    }

    #[test]
    fn corrupted_chains_give_errors_or_valid_graphs(
        g in arb_graph(),
        edits in prop::collection::vec((0usize..3, any::<u8>(), any::<usize>()), 1..4),
    ) {
        let text = corrupt(&serialize_chain(&g), &edits);
        if let Ok(parsed) = parse_proof_chain(&text) {
            assert_valid(&parsed);
        }
    }

    #[test]
    fn nested_parser_is_total(s in "[()& sent0-9>hypotesi-]{0,60}") {
        if let Ok(parsed) = parse_nested_proof(&s) {
            assert_valid(&parsed);
        }
    }
}

#[test]
fn nested_group_count_matches_steps() {
    for (text, groups) in [
        ("((sent19 & sent23) & sent17) & ((sent7 & sent8) & sent3)", 5),
        ("(sent1 & sent2)", 1),
        ("(sent1 & (sent2 & sent3)) -> hypothesis", 2),
    ] {
        let g = parse_nested_proof(text).unwrap();
        assert_eq!(g.len(), groups, "{text}");
        assert!(g.concludes_hypothesis());
        assert_valid(&g);
    }
}

#[test]
fn typed_errors_for_known_corruptions() {
    use strucprove::ProofError;
    for (text, want) in [
        ("sent1 & sent2 int1", ProofError::MissingArrow),
        ("sent1 & sentx -> int1", ProofError::BadNode("sentx".into())),
        ("sent1 & sent2 -> sent3", ProofError::SentenceConclusion(NodeId::sent(3))),
        ("sent1 -> int1; sent2 -> int1", ProofError::DuplicateConclusion(NodeId::int(1))),
        ("int2 & sent1 -> int1; sent3 -> int2", ProofError::ForwardReference(NodeId::int(2))),
    ] {
        assert_eq!(parse_proof_chain(text).unwrap_err(), want, "{text}");
    }
    assert_eq!(parse_nested_proof("((sent1 & sent2").unwrap_err(), ProofError::UnbalancedParens);
}
