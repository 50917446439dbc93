use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Pruning;
use crate::proof::{NodeId, ProofGraph, ProofStep};

/// Which rule removed a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneRule {
    /// Outside the `beam_b` best scores.
    TopK,
    /// The graph has exactly one step and the candidate consumes an
    /// intermediate.
    Literal,
    /// Consumes a node concluded in the previous iteration.
    Div,
    /// Does not consume a node concluded in the previous iteration.
    ReuseIc,
}

impl PruneRule {
    pub fn tag(self) -> &'static str {
        match self {
            PruneRule::TopK => "top-k",
            PruneRule::Literal => "literal",
            PruneRule::Div => "div",
            PruneRule::ReuseIc => "reuse-ic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pruned {
    /// Survivors, best first.
    pub kept: Vec<(ProofStep, u8)>,
    pub removed: Vec<(ProofStep, u8, PruneRule)>,
    /// The structural rules would have removed everything and the best
    /// candidate was kept anyway.
    pub guard_fired: bool,
}

/// Beam selection followed by the structural rules. Never returns an empty
/// list for non-empty input.
pub fn prune(
    candidates: &[(ProofStep, u8)],
    current: &ProofGraph,
    prev_new_nodes: &BTreeSet<NodeId>,
    beam_b: usize,
    mode: Pruning,
) -> Pruned {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, ka) = (&candidates[a].0, candidates[a].1);
        let (sb, kb) = (&candidates[b].0, candidates[b].1);
        kb.cmp(&ka).then(sa.premise_index_sum().cmp(&sb.premise_index_sum())).then(a.cmp(&b))
    });
    let mut removed = Vec::new();
    let mut top = Vec::new();
    for (rank, i) in order.into_iter().enumerate() {
        let (step, score) = candidates[i].clone();
        if rank < beam_b {
            top.push((step, score));
        } else {
            removed.push((step, score, PruneRule::TopK));
        }
    }
    if mode == Pruning::Off || top.is_empty() {
        return Pruned { kept: top, removed, guard_fired: false };
    }

    let touches_prev = |s: &ProofStep| s.premises().iter().any(|p| prev_new_nodes.contains(p));
    let mut kept = Vec::new();
    let mut structural = Vec::new();
    for (step, score) in &top {
        let rule = if current.len() == 1 && step.uses_intermediate() {
            Some(PruneRule::Literal)
        } else {
            match mode {
                Pruning::Div if touches_prev(step) => Some(PruneRule::Div),
                Pruning::ReuseIc if !touches_prev(step) => Some(PruneRule::ReuseIc),
                _ => None,
            }
        };
        match rule {
            Some(r) => structural.push((step.clone(), *score, r)),
            None => kept.push((step.clone(), *score)),
        }
    }
    let guard_fired = kept.is_empty();
    if guard_fired {
        let (step, score, _) = structural.remove(0);
        kept.push((step, score));
    }
    removed.extend(structural);
    Pruned { kept, removed, guard_fired }
}
