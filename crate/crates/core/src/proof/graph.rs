use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{parse_proof_chain, serialize_chain, NodeId, ProofError, ProofStep};

/// A proof graph: an ordered list of steps forming a DAG whose leaves are
/// context sentences and whose internal nodes are intermediate conclusions.
///
/// Construction validates every structural invariant, so a `ProofGraph` value
/// is always well formed. Steps are kept in a topological order (every
/// intermediate premise is concluded by an earlier step).
#[derive(Debug, Clone, Default)]
pub struct ProofGraph {
    steps: Vec<ProofStep>,
}

impl ProofGraph {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(steps: Vec<ProofStep>) -> Result<Self, ProofError> {
        let mut concluded: HashMap<NodeId, usize> = HashMap::new();
        for (i, step) in steps.iter().enumerate() {
            if concluded.insert(step.conclusion(), i).is_some() {
                return Err(ProofError::DuplicateConclusion(step.conclusion()));
            }
        }
        for (i, step) in steps.iter().enumerate() {
            for p in step.premises() {
                if p.is_sentence() {
                    continue;
                }
                match concluded.get(p) {
                    Some(&j) if j < i => {}
                    Some(_) => return Err(ProofError::ForwardReference(*p)),
                    None => return Err(ProofError::UnknownPremise(*p)),
                }
            }
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[ProofStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_step(&self) -> Option<&ProofStep> {
        self.steps.last()
    }

    /// All nodes mentioned by some step.
    pub fn nodes(&self) -> BTreeSet<NodeId> {
        let mut nodes = BTreeSet::new();
        for step in &self.steps {
            nodes.extend(step.premises().iter().copied());
            nodes.insert(step.conclusion());
        }
        nodes
    }

    /// One directed edge `premise -> conclusion` per premise of each step.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.steps
            .iter()
            .flat_map(|s| s.premises().iter().map(move |&p| (p, s.conclusion())))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.steps.iter().map(|s| s.premises().len()).sum()
    }

    /// Sentence nodes used anywhere in the graph.
    pub fn leaves(&self) -> BTreeSet<NodeId> {
        self.steps
            .iter()
            .flat_map(|s| s.premises().iter().copied())
            .filter(NodeId::is_sentence)
            .collect()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        match node {
            NodeId::Sentence(_) => self.steps.iter().any(|s| s.premises().contains(&node)),
            _ => self.step_for(node).is_some(),
        }
    }

    pub fn step_for(&self, conclusion: NodeId) -> Option<&ProofStep> {
        self.steps.iter().find(|s| s.conclusion() == conclusion)
    }

    pub fn concludes_hypothesis(&self) -> bool {
        self.steps.iter().any(ProofStep::concludes_hypothesis)
    }

    /// Next unused intermediate index.
    pub fn next_intermediate(&self) -> u32 {
        self.steps
            .iter()
            .filter_map(|s| match s.conclusion() {
                NodeId::Intermediate(i) => Some(i),
                _ => None,
            })
            .max()
            .unwrap_or(0)
            + 1
    }

    /// Sentence ancestors of `node`; a sentence is its own closure.
    pub fn leaf_closure(&self, node: NodeId) -> Result<BTreeSet<NodeId>, ProofError> {
        if node.is_sentence() {
            return Ok(BTreeSet::from([node]));
        }
        let closures = self.closures();
        closures.get(&node).cloned().ok_or(ProofError::UnknownNode(node))
    }

    /// Leaf closure of every concluded node, computed in one pass.
    pub fn closures(&self) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        let mut out: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for step in &self.steps {
            let mut leaves = BTreeSet::new();
            for p in step.premises() {
                if p.is_sentence() {
                    leaves.insert(*p);
                } else if let Some(c) = out.get(p) {
                    leaves.extend(c.iter().copied());
                }
            }
            out.insert(step.conclusion(), leaves);
        }
        out
    }

    /// Depth of each step: 1 when all premises are sentences, otherwise one
    /// more than the deepest intermediate premise.
    pub fn step_depths(&self) -> Vec<usize> {
        let mut by_node: HashMap<NodeId, usize> = HashMap::new();
        let mut depths = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            let d = 1 + step.premises().iter().filter_map(|p| by_node.get(p)).max().copied().unwrap_or(0);
            by_node.insert(step.conclusion(), d);
            depths.push(d);
        }
        depths
    }

    /// Longest leaf-to-root path, counted in steps.
    pub fn depth(&self) -> usize {
        self.step_depths().into_iter().max().unwrap_or(0)
    }

    /// Returns a new graph with `step` appended; `self` is untouched.
    pub fn extend(&self, step: ProofStep) -> Result<ProofGraph, ProofError> {
        for p in step.premises() {
            if !p.is_sentence() && self.step_for(*p).is_none() {
                return Err(ProofError::UnknownPremise(*p));
            }
        }
        if self.step_for(step.conclusion()).is_some() {
            return Err(ProofError::DuplicateConclusion(step.conclusion()));
        }
        let mut steps = self.steps.clone();
        steps.push(step);
        Ok(ProofGraph { steps })
    }

    /// Applies a consistent relabeling to every node. The mapping must be
    /// injective on the graph's nodes.
    pub fn relabel(&self, f: impl Fn(NodeId) -> NodeId) -> Result<ProofGraph, ProofError> {
        ProofGraph::new(self.steps.iter().map(|s| s.map_nodes(&f)).collect())
    }

    fn as_map(&self) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        self.steps.iter().map(|s| (s.conclusion(), s.premise_set())).collect()
    }
}

/// Graphs are equal when they contain the same steps (conclusion plus
/// premise set); step order and conclusion text are ignored.
impl PartialEq for ProofGraph {
    fn eq(&self, other: &Self) -> bool {
        self.steps.len() == other.steps.len() && self.as_map() == other.as_map()
    }
}

impl Eq for ProofGraph {}

impl Serialize for ProofGraph {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&serialize_chain(self))
    }
}

impl<'de> Deserialize<'de> for ProofGraph {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_proof_chain(&text).map_err(serde::de::Error::custom)
    }
}
