//! Exhaustive graph edit distance over every injective partial node map.
//! Exponential; only for graphs of a handful of nodes.

use std::collections::{BTreeSet, HashSet};

use strucprove::proof::{NodeId, ProofGraph};

#[derive(PartialEq, Eq, Clone, Debug)]
enum Label {
    Sent(u32),
    Hyp,
    Int(BTreeSet<NodeId>),
}

struct Flat {
    labels: Vec<Label>,
    edges: HashSet<(usize, usize)>,
}

fn flatten(g: &ProofGraph) -> Flat {
    let nodes: Vec<NodeId> = g.nodes().into_iter().collect();
    let labels = nodes
        .iter()
        .map(|n| match n {
            NodeId::Sentence(i) => Label::Sent(*i),
            NodeId::Hypothesis => Label::Hyp,
            NodeId::Intermediate(_) => Label::Int(g.leaf_closure(*n).unwrap()),
        })
        .collect();
    let pos = |n: NodeId| nodes.iter().position(|m| *m == n).unwrap();
    let edges = g.edges().into_iter().map(|(a, b)| (pos(a), pos(b))).collect();
    Flat { labels, edges }
}

fn cost(a: &Flat, b: &Flat, map: &[Option<usize>]) -> usize {
    let mut c = 0;
    let mut used = vec![false; b.labels.len()];
    for (i, m) in map.iter().enumerate() {
        match m {
            Some(j) => {
                used[*j] = true;
                if a.labels[i] != b.labels[*j] {
                    c += 1;
                }
            }
            None => c += 1,
        }
    }
    c += used.iter().filter(|u| !**u).count();
    let mut image = HashSet::new();
    for &(x, y) in &a.edges {
        match (map[x], map[y]) {
            (Some(p), Some(q)) if b.edges.contains(&(p, q)) => {
                image.insert((p, q));
            }
            _ => c += 1,
        }
    }
    c + b.edges.iter().filter(|e| !image.contains(e)).count()
}

pub fn brute_force(a: &ProofGraph, b: &ProofGraph) -> usize {
    let (fa, fb) = (flatten(a), flatten(b));
    let mut best = usize::MAX;
    let mut map = vec![None; fa.labels.len()];
    let mut used = vec![false; fb.labels.len()];
    fn rec(i: usize, fa: &Flat, fb: &Flat, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>, best: &mut usize) {
        if i == map.len() {
            *best = (*best).min(cost(fa, fb, map));
            return;
        }
        map[i] = None;
        rec(i + 1, fa, fb, map, used, best);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                map[i] = Some(j);
                rec(i + 1, fa, fb, map, used, best);
                used[j] = false;
            }
        }
        map[i] = None;
    }
    rec(0, &fa, &fb, &mut map, &mut used, &mut best);
    best
}
