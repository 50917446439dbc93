use super::parse_instances;
use crate::instance::Instance;

/// Hand-built desk-scale instances in the normalized format.
pub const FIXTURES_JSONL: &str = include_str!("../../fixtures/fixtures.jsonl");

pub fn fixtures() -> Vec<Instance> {
    parse_instances(FIXTURES_JSONL).expect("bundled fixtures are valid")
}

pub fn fixture(id: &str) -> Option<Instance> {
    fixtures().into_iter().find(|i| i.id == id)
}
