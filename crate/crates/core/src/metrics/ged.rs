//! Graph edit distance between proof graphs.
//!
//! Unit costs for node insertion, deletion and relabeling and for edge
//! insertion and deletion. Intermediates carry their leaf closure as label,
//! so two intermediates match for free when they are supported by the same
//! sentences, whatever their indices.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::proof::{NodeId, ProofGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GedOptions {
    /// Largest |N| + |E| per graph solved exactly.
    pub exact_limit: usize,
    /// Beyond the limit, return a greedy upper bound instead of failing.
    pub allow_approximate: bool,
}

impl Default for GedOptions {
    fn default() -> Self {
        Self { exact_limit: 30, allow_approximate: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub value: f64,
    pub distance: usize,
    pub approximate: bool,
}

struct Prepared {
    labels: Vec<usize>,
    adj: Vec<Vec<bool>>,
    edges: Vec<(usize, usize)>,
}

impl Prepared {
    fn size(&self) -> usize {
        self.labels.len() + self.edges.len()
    }
}

#[derive(Hash, PartialEq, Eq)]
enum Label {
    Sent(u32),
    Hyp,
    Int(BTreeSet<NodeId>),
}

fn prepare(g: &ProofGraph, interner: &mut HashMap<Label, usize>) -> Prepared {
    let nodes: Vec<NodeId> = g.nodes().into_iter().collect();
    let closures = g.closures();
    let labels = nodes
        .iter()
        .map(|n| {
            let label = match n {
                NodeId::Sentence(i) => Label::Sent(*i),
                NodeId::Hypothesis => Label::Hyp,
                NodeId::Intermediate(_) => Label::Int(closures.get(n).cloned().unwrap_or_default()),
            };
            let next = interner.len();
            *interner.entry(label).or_insert(next)
        })
        .collect();
    let pos: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut adj = vec![vec![false; nodes.len()]; nodes.len()];
    let edges: Vec<(usize, usize)> = g.edges().into_iter().map(|(a, b)| (pos[&a], pos[&b])).collect();
    for &(a, b) in &edges {
        adj[a][b] = true;
    }
    Prepared { labels, adj, edges }
}

struct Problem<'p> {
    a: &'p Prepared,
    b: &'p Prepared,
    /// Processing order over `a`'s nodes.
    order: Vec<usize>,
    n_labels: usize,
}

#[derive(Clone)]
struct Partial {
    /// `map[k]` is the image of `order[k]`; `usize::MAX` means deleted.
    map: Vec<usize>,
    used: Vec<bool>,
    cost: usize,
}

const DELETED: usize = usize::MAX;

impl Problem<'_> {
    /// Cost added by mapping the next node of `a` to `target`.
    fn step_cost(&self, p: &Partial, target: usize) -> usize {
        let u = self.order[p.map.len()];
        let mut c = 0;
        if target == DELETED {
            c += 1;
        } else if self.a.labels[u] != self.b.labels[target] {
            c += 1;
        }
        for (k, &w) in p.map.iter().enumerate() {
            let x = self.order[k];
            for (from, to, bf, bt) in [(u, x, target, w), (x, u, w, target)] {
                let in_a = self.a.adj[from][to];
                let in_b = bf != DELETED && bt != DELETED && self.b.adj[bf][bt];
                if in_a != in_b {
                    c += 1;
                }
            }
        }
        c
    }

    /// Insertions of the `b` nodes and edges left over by a complete map.
    fn completion_cost(&self, p: &Partial) -> usize {
        let free = |v: usize| !p.used[v];
        let nodes = (0..self.b.labels.len()).filter(|&v| free(v)).count();
        let edges = self.b.edges.iter().filter(|&&(x, y)| free(x) || free(y)).count();
        nodes + edges
    }

    /// Admissible estimate of the cost still to pay.
    fn lower_bound(&self, p: &Partial) -> usize {
        let done = p.map.len();
        let rest_a = &self.order[done..];
        let free_b: Vec<usize> = (0..self.b.labels.len()).filter(|&v| !p.used[v]).collect();
        let mut counts = vec![0i64; self.n_labels];
        for &u in rest_a {
            counts[self.a.labels[u]] += 1;
        }
        let mut common = 0;
        for &v in &free_b {
            let l = self.b.labels[v];
            if counts[l] > 0 {
                counts[l] -= 1;
                common += 1;
            }
        }
        let node_bound = rest_a.len().max(free_b.len()) - common;

        let pending_a = self.a.edges.iter().filter(|&&(x, y)| rest_a.contains(&x) || rest_a.contains(&y)).count();
        let pending_b = self
            .b
            .edges
            .iter()
            .filter(|&&(x, y)| !p.used[x] || !p.used[y])
            .count();
        node_bound + pending_a.abs_diff(pending_b)
    }

    fn children(&self, p: &Partial) -> impl Iterator<Item = Partial> + '_ {
        let targets: Vec<usize> =
            (0..self.b.labels.len()).filter(|&v| !p.used[v]).chain([DELETED]).collect();
        let p = p.clone();
        targets.into_iter().map(move |t| {
            let mut c = p.clone();
            c.cost += self.step_cost(&p, t);
            c.map.push(t);
            if t != DELETED {
                c.used[t] = true;
            }
            c
        })
    }

    fn exact(&self) -> usize {
        let n = self.order.len();
        let start = Partial { map: Vec::new(), used: vec![false; self.b.labels.len()], cost: 0 };
        let mut heap = BinaryHeap::new();
        let mut arena = vec![start];
        let f0 = self.lower_bound(&arena[0]);
        heap.push((Reverse(f0), 0usize, Reverse(0usize)));
        while let Some((Reverse(f), _, Reverse(id))) = heap.pop() {
            let p = arena[id].clone();
            if p.map.len() == n {
                // Completed states are queued with their exact total.
                return f;
            }
            for child in self.children(&p) {
                let depth = child.map.len();
                let f = if depth == n {
                    child.cost + self.completion_cost(&child)
                } else {
                    child.cost + self.lower_bound(&child)
                };
                arena.push(child);
                heap.push((Reverse(f), depth, Reverse(arena.len() - 1)));
            }
        }
        unreachable!("the search space always contains a complete map")
    }

    /// Greedy upper bound: each node takes its locally cheapest target.
    fn greedy(&self) -> usize {
        let mut p = Partial { map: Vec::new(), used: vec![false; self.b.labels.len()], cost: 0 };
        while p.map.len() < self.order.len() {
            p = self
                .children(&p)
                .min_by_key(|c| c.cost)
                .expect("deletion is always available");
        }
        p.cost + self.completion_cost(&p)
    }
}

fn size_units(g: &ProofGraph) -> usize {
    g.nodes().len() + g.edge_count()
}

/// Edit distance and whether it is an approximation.
pub fn graph_edit_distance(a: &ProofGraph, b: &ProofGraph, opts: &GedOptions) -> Result<(usize, bool), MetricError> {
    let mut interner = HashMap::new();
    let pa = prepare(a, &mut interner);
    let pb = prepare(b, &mut interner);
    let largest = pa.size().max(pb.size());
    let too_large = largest > opts.exact_limit;
    if too_large && !opts.allow_approximate {
        return Err(MetricError::TooLarge { units: largest, limit: opts.exact_limit });
    }
    // Most constrained nodes first: higher degree prunes earlier.
    let mut order: Vec<usize> = (0..pa.labels.len()).collect();
    let degree = |u: usize| pa.edges.iter().filter(|&&(x, y)| x == u || y == u).count();
    order.sort_by_key(|&u| Reverse(degree(u)));
    let problem = Problem { a: &pa, b: &pb, order, n_labels: interner.len() };
    if too_large {
        Ok((problem.greedy(), true))
    } else {
        Ok((problem.exact(), false))
    }
}

pub fn graph_similarity_with(a: &ProofGraph, b: &ProofGraph, opts: &GedOptions) -> Result<Similarity, MetricError> {
    let (distance, approximate) = graph_edit_distance(a, b, opts)?;
    let denom = size_units(a).max(size_units(b));
    let value = if denom == 0 { 1.0 } else { (1.0 - distance as f64 / denom as f64).clamp(0.0, 1.0) };
    Ok(Similarity { value, distance, approximate })
}

/// Exact similarity with the default size limit.
pub fn graph_similarity(a: &ProofGraph, b: &ProofGraph) -> Result<f64, MetricError> {
    graph_similarity_with(a, b, &GedOptions::default()).map(|s| s.value)
}
