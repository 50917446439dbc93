//! Random valid proof graphs and byte-level corruption of their text.

use proptest::prelude::*;
use strucprove::proof::{NodeId, ProofGraph, ProofStep};

const WORDS: [&str; 8] = ["gravity", "planet", "orbits", "the", "sun", "is", "a", "kind of"];

/// Steps as (premise picks, text); picks index into sentences then the
/// intermediates concluded so far.
pub fn arb_graph() -> impl Strategy<Value = ProofGraph> {
    let step = (prop::collection::vec(0usize..64, 1..=3), prop::collection::vec(0usize..WORDS.len(), 0..6));
    (prop::collection::vec(step, 0..=8), any::<bool>(), Just((1..=8).collect::<Vec<u32>>()).prop_shuffle())
        .prop_map(|(raw, close, int_ids)| {
            let mut steps = Vec::new();
            let mut concluded: Vec<NodeId> = Vec::new();
            let n = raw.len();
            for (k, (picks, words)) in raw.into_iter().enumerate() {
                let mut premises = Vec::new();
                for p in picks {
                    let node = if !concluded.is_empty() && p % 3 == 0 {
                        concluded[p % concluded.len()]
                    } else {
                        NodeId::sent(1 + (p % 30) as u32)
                    };
                    if !premises.contains(&node) {
                        premises.push(node);
                    }
                }
                let conclusion = if close && k + 1 == n { NodeId::Hypothesis } else { NodeId::int(int_ids[k]) };
                let text: Vec<&str> = words.iter().map(|w| WORDS[*w]).collect();
                let text = if conclusion.is_hypothesis() { String::new() } else { text.join(" ") };
                steps.push(ProofStep::new(premises, conclusion, text).unwrap());
                concluded.push(conclusion);
            }
            ProofGraph::new(steps).expect("generator builds valid graphs")
        })
}

/// Every invariant a graph must satisfy, checked from the outside.
pub fn check_valid(g: &ProofGraph) -> Result<(), String> {
    let mut concluded = std::collections::BTreeSet::new();
    for s in g.steps() {
        if s.premises().is_empty() || s.conclusion().is_sentence() {
            return Err(format!("malformed step {s}"));
        }
        for p in s.premises() {
            if p.is_hypothesis() || !(p.is_sentence() || concluded.contains(p)) {
                return Err(format!("bad premise {p} in {s}"));
            }
        }
        if !concluded.insert(s.conclusion()) {
            return Err(format!("{} concluded twice", s.conclusion()));
        }
    }
    if g.edge_count() != g.steps().iter().map(|s| s.premises().len()).sum::<usize>() {
        return Err("edge count mismatch".into());
    }
    Ok(())
}

pub fn corrupt(text: &str, edits: &[(usize, u8, usize)]) -> String {
    const NOISE: &[u8] = b"&;:->()sentint0123456789 hypothesis\n";
    let mut bytes = text.as_bytes().to_vec();
    for &(kind, ch, pos) in edits {
        let at = if bytes.is_empty() { 0 } else { pos % (bytes.len() + 1) };
        match kind % 3 {
            0 if at < bytes.len() => {
                bytes.remove(at);
            }
            1 => bytes.insert(at, NOISE[ch as usize % NOISE.len()]),
            _ if at < bytes.len() => bytes[at] = NOISE[ch as usize % NOISE.len()],
            _ => {}
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}
