use std::sync::Arc;

use super::encoder::{similarity, GraphEmbedding, GraphEncoder, StructuralEncoder};
use crate::instance::{Demonstration, Instance};
use crate::proof::ProofGraph;

/// Demonstration database with embeddings computed once at build time.
pub struct DemoDb {
    encoder: Arc<dyn GraphEncoder>,
    entries: Vec<(Demonstration, GraphEmbedding)>,
}

#[derive(Debug, Clone, Copy)]
pub struct ScoredDemo<'a> {
    pub demo: &'a Demonstration,
    pub similarity: f64,
}

/// Keeps instances that carry gold, embedded with the default encoder.
pub fn build_demo_db(instances: impl IntoIterator<Item = Instance>) -> DemoDb {
    DemoDb::with_encoder(instances, Arc::new(StructuralEncoder::default()))
}

impl DemoDb {
    pub fn with_encoder(instances: impl IntoIterator<Item = Instance>, encoder: Arc<dyn GraphEncoder>) -> Self {
        let entries = instances
            .into_iter()
            .filter_map(Demonstration::new)
            .map(|d| {
                let e = encoder.encode(d.gold(), &d.instance().hypothesis);
                (d, e)
            })
            .collect();
        Self { encoder, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn demonstrations(&self) -> impl Iterator<Item = &Demonstration> {
        self.entries.iter().map(|(d, _)| d)
    }

    pub fn embedding(&self, id: &str) -> Option<&GraphEmbedding> {
        self.entries.iter().find(|(d, _)| d.id() == id).map(|(_, e)| e)
    }

    pub fn encoder(&self) -> &dyn GraphEncoder {
        self.encoder.as_ref()
    }

    /// Top `k` demonstrations by similarity to `guessed`, ties broken by
    /// ascending id. The instance itself is never returned.
    pub fn search(&self, inst: &Instance, guessed: &ProofGraph, k: usize) -> Vec<ScoredDemo<'_>> {
        let query = self.encoder.encode(guessed, &inst.hypothesis);
        let mut scored: Vec<ScoredDemo<'_>> = self
            .entries
            .iter()
            .filter(|(d, _)| d.id() != inst.id)
            .map(|(demo, e)| ScoredDemo {
                demo,
                similarity: similarity(&query, e).expect("one encoder, one dimension"),
            })
            .collect();
        scored.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then_with(|| a.demo.id().cmp(b.demo.id())));
        scored.truncate(k);
        scored
    }
}
