use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::llm::Template;
use crate::proof::{NodeId, ProofGraph};

/// Per-instance metadata carried through from the dataset record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstanceMeta {
    pub dataset: String,
    /// Hand-labeled proof depth, when the source provides one.
    pub depth: Option<u32>,
    /// Hand-labeled chain/non-chain flag, when the source provides one.
    pub sequential: Option<bool>,
    /// Sentence subset shown when this instance is used as a demonstration
    /// for the proposal and evaluation prompts. Defaults to the gold leaves.
    pub demo_candidates: Option<Vec<u32>>,
    /// "Missing:" answer shown when this instance is used as a hint
    /// demonstration.
    pub demo_hint: Option<String>,
}

/// A task tuple: question, hypothesis and evidence context, plus an optional
/// gold proof.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub question: String,
    pub hypothesis: String,
    /// Sentence index to text. Indices are whatever the source used; they may
    /// be sparse.
    pub context: BTreeMap<u32, String>,
    pub gold: Option<ProofGraph>,
    pub meta: InstanceMeta,
}

impl Instance {
    /// Sentence leaves of the gold proof that are missing from the context.
    pub fn dangling_gold_sentences(&self) -> Vec<NodeId> {
        match &self.gold {
            Some(g) => g
                .leaves()
                .into_iter()
                .filter(|n| n.index().map_or(true, |i| !self.context.contains_key(&i)))
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn sentence(&self, node: NodeId) -> Option<&str> {
        match node {
            NodeId::Sentence(i) => self.context.get(&i).map(String::as_str),
            _ => None,
        }
    }

    pub fn sentence_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.context.keys().map(|&i| NodeId::Sentence(i))
    }
}

/// A solved example used for in-context prompting. The gold proof is
/// required.
#[derive(Debug, Clone)]
pub struct Demonstration {
    instance: Instance,
    rendered: [OnceLock<String>; Template::COUNT],
}

impl Demonstration {
    /// Returns `None` when the instance has no gold proof.
    pub fn new(instance: Instance) -> Option<Self> {
        instance.gold.as_ref()?;
        Some(Self { instance, rendered: Default::default() })
    }

    pub fn id(&self) -> &str {
        &self.instance.id
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn gold(&self) -> &ProofGraph {
        self.instance.gold.as_ref().expect("demonstrations always carry gold")
    }

    /// Lazily rendered prompt block for `kind`.
    pub(crate) fn block(&self, template: Template, render: impl FnOnce(&Demonstration) -> String) -> &str {
        self.rendered[template.index()].get_or_init(|| render(self))
    }
}
