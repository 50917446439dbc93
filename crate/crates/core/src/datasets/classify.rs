use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::instance::Instance;
use crate::proof::ProofGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Classification {
    pub sequential: bool,
    pub depth: usize,
}

/// Classifies an instance by the shape of its gold proof.
///
/// A proof is sequential when every step after the first consumes exactly one
/// intermediate, namely the conclusion of the step right before it.
pub fn classify(instance: &Instance) -> Result<Classification, DatasetError> {
    let gold = instance.gold.as_ref().ok_or_else(|| DatasetError::NoGold(instance.id.clone()))?;
    Ok(Classification { sequential: is_chain(gold), depth: gold.depth() })
}

fn is_chain(graph: &ProofGraph) -> bool {
    graph.steps().windows(2).all(|pair| {
        let ints: Vec<_> = pair[1].premises().iter().filter(|p| !p.is_sentence()).collect();
        ints.len() == 1 && *ints[0] == pair[0].conclusion()
    })
}
