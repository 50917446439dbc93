//! Scoring predicted proofs against gold.

mod ged;

pub use ged::{graph_edit_distance, graph_similarity, graph_similarity_with, GedOptions, Similarity};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::proof::{NodeId, ProofGraph, ProofStep};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("graph has {units} nodes+edges, above the exact limit of {limit}")]
    TooLarge { units: usize, limit: usize },
    #[error("nothing to aggregate")]
    EmptyList,
}

/// Harmonic mean; 0 when both are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(hit: usize, total: usize, other_total: usize) -> f64 {
    match (total, other_total) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        _ => hit as f64 / total as f64,
    }
}

fn prf(hit: usize, n_pred: usize, n_gold: usize) -> (f64, f64, f64) {
    let p = ratio(hit, n_pred, n_gold);
    let r = ratio(hit, n_gold, n_pred);
    (p, r, f1(p, r))
}

/// Precision, recall and F1 over the sentence leaves.
pub fn evidence_scores(pred: &ProofGraph, gold: &ProofGraph) -> (f64, f64, f64) {
    let (ep, eg) = (pred.leaves(), gold.leaves());
    prf(ep.intersection(&eg).count(), ep.len(), eg.len())
}

/// A step as the set of its premises' leaf closures.
fn canonical(g: &ProofGraph, step: &ProofStep) -> BTreeSet<BTreeSet<NodeId>> {
    step.premises().iter().map(|p| g.leaf_closure(*p).unwrap_or_default()).collect()
}

/// Precision, recall and F1 over steps matched one-to-one by canonical form.
pub fn proof_scores(pred: &ProofGraph, gold: &ProofGraph) -> (f64, f64, f64) {
    let mut pool: Vec<Option<BTreeSet<BTreeSet<NodeId>>>> =
        pred.steps().iter().map(|s| Some(canonical(pred, s))).collect();
    let mut hit = 0;
    for step in gold.steps() {
        let c = canonical(gold, step);
        if let Some(slot) = pool.iter_mut().find(|x| x.as_ref() == Some(&c)) {
            *slot = None;
            hit += 1;
        }
    }
    prf(hit, pred.len(), gold.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ev_p: f64,
    pub ev_r: f64,
    pub ev_f: f64,
    pub pr_p: f64,
    pub pr_r: f64,
    pub pr_f: f64,
    pub g_sim: f64,
    /// 1.0 or 0.0 per instance; the share of such instances once aggregated.
    pub per_proof_recall_is_1: f64,
    /// Set when `g_sim` came from the greedy bound.
    #[serde(default)]
    pub g_sim_approximate: bool,
}

impl MetricReport {
    /// Scores one prediction; a missing prediction scores as the empty graph.
    pub fn score(pred: Option<&ProofGraph>, gold: &ProofGraph, ged: &GedOptions) -> Result<Self, MetricError> {
        let empty = ProofGraph::empty();
        let pred = pred.unwrap_or(&empty);
        let (ev_p, ev_r, ev_f) = evidence_scores(pred, gold);
        let (pr_p, pr_r, pr_f) = proof_scores(pred, gold);
        let sim = graph_similarity_with(pred, gold, ged)?;
        Ok(Self {
            ev_p,
            ev_r,
            ev_f,
            pr_p,
            pr_r,
            pr_f,
            g_sim: sim.value,
            per_proof_recall_is_1: if pr_r == 1.0 { 1.0 } else { 0.0 },
            g_sim_approximate: sim.approximate,
        })
    }

    pub const FIELDS: [&'static str; 8] = ["ev_p", "ev_r", "ev_f", "pr_p", "pr_r", "pr_f", "g_sim", "recall_is_1"];

    pub fn values(&self) -> [f64; 8] {
        [self.ev_p, self.ev_r, self.ev_f, self.pr_p, self.pr_r, self.pr_f, self.g_sim, self.per_proof_recall_is_1]
    }
}

/// Field-wise mean.
pub fn aggregate(reports: &[MetricReport]) -> Result<MetricReport, MetricError> {
    if reports.is_empty() {
        return Err(MetricError::EmptyList);
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        ev_p: mean(|r| r.ev_p),
        ev_r: mean(|r| r.ev_r),
        ev_f: mean(|r| r.ev_f),
        pr_p: mean(|r| r.pr_p),
        pr_r: mean(|r| r.pr_r),
        pr_f: mean(|r| r.pr_f),
        g_sim: mean(|r| r.g_sim),
        per_proof_recall_is_1: mean(|r| r.per_proof_recall_is_1),
        g_sim_approximate: reports.iter().any(|r| r.g_sim_approximate),
    })
}
