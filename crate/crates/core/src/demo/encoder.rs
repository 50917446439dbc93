//! Deterministic structural graph encoder.
//!
//! Layout of the default 64-dimensional vector:
//!
//! | range   | feature                                                        |
//! |---------|----------------------------------------------------------------|
//! | 0..4    | leaves/16, steps/16, depth/8, max in-degree/4 (each capped at 1) |
//! | 4..12   | share of steps at depth 1..8 (last bucket collects deeper)       |
//! | 12..16  | share of steps with 1..4 premises (last bucket collects more)    |
//! | 16..64  | hashed Weisfeiler-Lehman labels, iterations 0..=2, summing to 1  |
//!
//! WL labels start from (in-degree, out-degree) only, so node indices never
//! influence the vector. An optional content channel appends 16 dimensions of
//! hashed hypothesis unigrams.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::DemoError;
use crate::proof::{NodeId, ProofGraph};

pub const STRUCTURE_DIM: usize = 64;
const COUNT_DIMS: usize = 4;
const DEPTH_BUCKETS: usize = 8;
const ARITY_BUCKETS: usize = 4;
const WL_BUCKETS: usize = 48;
const WL_ITERATIONS: usize = 2;
pub const CONTENT_DIM: usize = 16;
pub const CONTENT_WEIGHT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEmbedding {
    vector: Vec<f64>,
    norm: f64,
}

impl GraphEmbedding {
    pub fn new(vector: Vec<f64>) -> Self {
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self { vector, norm }
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn similarity(a: &GraphEmbedding, b: &GraphEmbedding) -> Result<f64, DemoError> {
    if a.dim() != b.dim() {
        return Err(DemoError::DimensionMismatch(a.dim(), b.dim()));
    }
    if a.norm == 0.0 || b.norm == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.vector.iter().zip(&b.vector).map(|(x, y)| x * y).sum();
    Ok((dot / (a.norm * b.norm)).clamp(-1.0, 1.0))
}

/// Maps a proof graph (and the hypothesis it proves) to a fixed-length vector.
/// Implementations must be pure.
pub trait GraphEncoder: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, graph: &ProofGraph, hypothesis: &str) -> GraphEmbedding;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StructuralEncoder {
    pub content_channel: bool,
}

impl StructuralEncoder {
    pub fn with_content() -> Self {
        Self { content_channel: true }
    }
}

impl GraphEncoder for StructuralEncoder {
    fn dim(&self) -> usize {
        STRUCTURE_DIM + if self.content_channel { CONTENT_DIM } else { 0 }
    }

    fn encode(&self, graph: &ProofGraph, hypothesis: &str) -> GraphEmbedding {
        let mut v = structure_features(graph);
        if self.content_channel {
            v.extend(content_features(hypothesis));
        }
        GraphEmbedding::new(v)
    }
}

/// Structural embedding with the default encoder.
pub fn encode_graph(graph: &ProofGraph) -> GraphEmbedding {
    StructuralEncoder::default().encode(graph, "")
}

fn structure_features(graph: &ProofGraph) -> Vec<f64> {
    let mut v = vec![0.0; STRUCTURE_DIM];
    if graph.is_empty() {
        return v;
    }
    let steps = graph.len() as f64;
    let depths = graph.step_depths();
    let max_arity = graph.steps().iter().map(|s| s.premises().len()).max().unwrap_or(0);

    v[0] = (graph.leaves().len() as f64 / 16.0).min(1.0);
    v[1] = (steps / 16.0).min(1.0);
    v[2] = (graph.depth() as f64 / 8.0).min(1.0);
    v[3] = (max_arity as f64 / 4.0).min(1.0);

    for &d in &depths {
        v[COUNT_DIMS + d.clamp(1, DEPTH_BUCKETS) - 1] += 1.0 / steps;
    }
    let arity_base = COUNT_DIMS + DEPTH_BUCKETS;
    for step in graph.steps() {
        let a = step.premises().len().clamp(1, ARITY_BUCKETS);
        v[arity_base + a - 1] += 1.0 / steps;
    }

    let wl_base = arity_base + ARITY_BUCKETS;
    let labels = wl_labels(graph);
    let total = labels.len() as f64;
    for label in labels {
        v[wl_base + (label % WL_BUCKETS as u64) as usize] += 1.0 / total;
    }
    v
}

/// All WL labels from iterations 0..=WL_ITERATIONS, one per node per round.
fn wl_labels(graph: &ProofGraph) -> Vec<u64> {
    let nodes: Vec<NodeId> = graph.nodes().into_iter().collect();
    let pos: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (from, to) in graph.edges() {
        preds[pos[&to]].push(pos[&from]);
        succs[pos[&from]].push(pos[&to]);
    }
    let mut current: Vec<u64> = (0..nodes.len())
        .map(|i| {
            let mut h = Fnv::new();
            h.write(b"wl0");
            h.write_u64(preds[i].len() as u64);
            h.write_u64(succs[i].len() as u64);
            h.finish()
        })
        .collect();
    let mut all = current.clone();
    for round in 1..=WL_ITERATIONS {
        let next: Vec<u64> = (0..nodes.len())
            .map(|i| {
                let mut up: Vec<u64> = preds[i].iter().map(|&j| current[j]).collect();
                let mut down: Vec<u64> = succs[i].iter().map(|&j| current[j]).collect();
                up.sort_unstable();
                down.sort_unstable();
                let mut h = Fnv::new();
                h.write_u64(round as u64);
                h.write_u64(current[i]);
                h.write(b"<");
                up.iter().for_each(|&x| h.write_u64(x));
                h.write(b">");
                down.iter().for_each(|&x| h.write_u64(x));
                h.finish()
            })
            .collect();
        all.extend_from_slice(&next);
        current = next;
    }
    all
}

fn content_features(text: &str) -> Vec<f64> {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for token in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
    {
        let mut h = Fnv::new();
        h.write(token.as_bytes());
        *counts.entry((h.finish() % CONTENT_DIM as u64) as usize).or_default() += 1.0;
    }
    let mut v = vec![0.0; CONTENT_DIM];
    for (i, c) in counts {
        v[i] = c;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x *= CONTENT_WEIGHT / norm);
    }
    v
}

/// 64-bit FNV-1a. Stable across platforms and toolchain versions, unlike
/// `DefaultHasher`.
pub(crate) struct Fnv(u64);

impl Fnv {
    pub(crate) fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    pub(crate) fn write_u64(&mut self, x: u64) {
        self.write(&x.to_le_bytes());
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}
