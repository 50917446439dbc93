//! Pruning scenarios with their expected outcome.

use std::collections::BTreeSet;

use strucprove::proof::{parse_proof_chain, parse_step_line, NodeId};
use strucprove::search::{prune, PruneRule, Pruned, Pruning};

pub struct Case {
    pub name: &'static str,
    pub graph: &'static str,
    pub prev: &'static [&'static str],
    pub candidates: &'static [(&'static str, u8)],
    pub beam_b: usize,
    pub mode: Pruning,
    pub kept: &'static [&'static str],
    /// (line, rule) for every removed candidate, in removal order.
    pub removed: &'static [(&'static str, PruneRule)],
    pub guard: bool,
}

pub const CASES: &[Case] = &[
    Case {
        name: "top-k keeps the two best",
        graph: "",
        prev: &[],
        candidates: &[("sent1 & sent2 -> int1", 90), ("sent3 & sent4 -> int1", 70), ("sent5 & sent6 -> int1", 40)],
        beam_b: 2,
        mode: Pruning::Off,
        kept: &["sent1 & sent2 -> int1", "sent3 & sent4 -> int1"],
        removed: &[("sent5 & sent6 -> int1", PruneRule::TopK)],
        guard: false,
    },
    Case {
        name: "top-k sorts by score before cutting",
        graph: "",
        prev: &[],
        candidates: &[("sent5 & sent6 -> int1", 40), ("sent1 & sent2 -> int1", 90), ("sent3 & sent4 -> int1", 70)],
        beam_b: 2,
        mode: Pruning::Div,
        kept: &["sent1 & sent2 -> int1", "sent3 & sent4 -> int1"],
        removed: &[("sent5 & sent6 -> int1", PruneRule::TopK)],
        guard: false,
    },
    Case {
        name: "tie broken by lower premise index sum",
        graph: "",
        prev: &[],
        candidates: &[("sent9 & sent8 -> int1", 50), ("sent1 & sent2 -> int1", 50)],
        beam_b: 1,
        mode: Pruning::Off,
        kept: &["sent1 & sent2 -> int1"],
        removed: &[("sent9 & sent8 -> int1", PruneRule::TopK)],
        guard: false,
    },
    Case {
        name: "full tie broken by input order",
        graph: "",
        prev: &[],
        candidates: &[("sent2 & sent1 -> int1", 50), ("sent1 & sent2 -> int1", 50)],
        beam_b: 1,
        mode: Pruning::Off,
        kept: &["sent2 & sent1 -> int1"],
        removed: &[("sent1 & sent2 -> int1", PruneRule::TopK)],
        guard: false,
    },
    Case {
        name: "literal rule on a one-step graph",
        graph: "sent1 & sent2 -> int1",
        prev: &[],
        candidates: &[("sent3 & int1 -> int2", 95), ("sent3 & sent4 -> int2", 60)],
        beam_b: 3,
        mode: Pruning::Div,
        kept: &["sent3 & sent4 -> int2"],
        removed: &[("sent3 & int1 -> int2", PruneRule::Literal)],
        guard: false,
    },
    Case {
        name: "literal rule silent on larger graphs",
        graph: "sent1 & sent2 -> int1; sent3 & sent4 -> int2",
        prev: &["int2"],
        candidates: &[("sent5 & int1 -> int3", 95), ("sent5 & sent6 -> int3", 60)],
        beam_b: 3,
        mode: Pruning::Div,
        kept: &["sent5 & int1 -> int3", "sent5 & sent6 -> int3"],
        removed: &[],
        guard: false,
    },
    Case {
        name: "div removes growth from the previous conclusion",
        graph: "sent1 & sent2 -> int1; sent5 & sent6 -> int2",
        prev: &["int1"],
        candidates: &[("sent3 & int1 -> int3", 80), ("sent1 & sent2 -> int3", 75)],
        beam_b: 3,
        mode: Pruning::Div,
        kept: &["sent1 & sent2 -> int3"],
        removed: &[("sent3 & int1 -> int3", PruneRule::Div)],
        guard: false,
    },
    Case {
        name: "reuse-ic keeps only growth from the previous conclusion",
        graph: "sent1 & sent2 -> int1; sent5 & sent6 -> int2",
        prev: &["int1"],
        candidates: &[("sent3 & int1 -> int3", 80), ("sent1 & sent2 -> int3", 75)],
        beam_b: 3,
        mode: Pruning::ReuseIc,
        kept: &["sent3 & int1 -> int3"],
        removed: &[("sent1 & sent2 -> int3", PruneRule::ReuseIc)],
        guard: false,
    },
    Case {
        name: "off ignores structure",
        graph: "sent1 & sent2 -> int1",
        prev: &["int1"],
        candidates: &[("sent3 & int1 -> int2", 80), ("sent1 & sent3 -> int2", 75)],
        beam_b: 3,
        mode: Pruning::Off,
        kept: &["sent3 & int1 -> int2", "sent1 & sent3 -> int2"],
        removed: &[],
        guard: false,
    },
    Case {
        name: "guard keeps the best when div empties the list",
        graph: "sent1 & sent2 -> int1; sent3 & sent4 -> int2",
        prev: &["int2"],
        candidates: &[("int2 & sent5 -> int3", 70), ("int2 & sent6 -> int3", 85)],
        beam_b: 3,
        mode: Pruning::Div,
        kept: &["int2 & sent6 -> int3"],
        removed: &[("int2 & sent5 -> int3", PruneRule::Div)],
        guard: true,
    },
    Case {
        name: "guard keeps the best when the literal rule empties the list",
        graph: "sent1 & sent2 -> int1",
        prev: &["int1"],
        candidates: &[("int1 & sent3 -> hypothesis", 90), ("int1 & sent4 -> int2", 40)],
        beam_b: 3,
        mode: Pruning::Div,
        kept: &["int1 & sent3 -> hypothesis"],
        removed: &[("int1 & sent4 -> int2", PruneRule::Literal)],
        guard: true,
    },
    Case {
        name: "guard under reuse-ic",
        graph: "sent1 & sent2 -> int1; sent3 & sent4 -> int2",
        prev: &["int2"],
        candidates: &[("sent5 & sent6 -> int3", 30), ("sent7 & sent8 -> int3", 20)],
        beam_b: 3,
        mode: Pruning::ReuseIc,
        kept: &["sent5 & sent6 -> int3"],
        removed: &[("sent7 & sent8 -> int3", PruneRule::ReuseIc)],
        guard: true,
    },
];

pub fn run(case: &Case) -> Pruned {
    let graph = parse_proof_chain(case.graph).unwrap();
    let prev: BTreeSet<NodeId> = case.prev.iter().map(|n| n.parse().unwrap()).collect();
    let candidates: Vec<_> = case.candidates.iter().map(|(l, s)| (parse_step_line(l).unwrap(), *s)).collect();
    prune(&candidates, &graph, &prev, case.beam_b, case.mode)
}

/// Runs `case` twice and describes the first mismatch, if any.
pub fn check(case: &Case) -> Result<(), String> {
    let got = run(case);
    if got != run(case) {
        return Err(format!("{}: not deterministic", case.name));
    }
    let kept: Vec<String> = got.kept.iter().map(|(s, _)| s.to_string()).collect();
    if kept != case.kept {
        return Err(format!("{}: kept {kept:?}", case.name));
    }
    let removed: Vec<(String, PruneRule)> = got.removed.iter().map(|(s, _, r)| (s.to_string(), *r)).collect();
    let want: Vec<(String, PruneRule)> = case.removed.iter().map(|(l, r)| (l.to_string(), *r)).collect();
    if removed != want {
        return Err(format!("{}: removed {removed:?}", case.name));
    }
    if got.guard_fired != case.guard {
        return Err(format!("{}: guard_fired {}", case.name, got.guard_fired));
    }
    Ok(())
}
