use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use super::{DatasetError, ENTAILMENT_BANK};
use crate::instance::{Instance, InstanceMeta};
use crate::proof::{parse_proof_chain, serialize_chain, NodeId};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    #[serde(default = "default_version")]
    format_version: u32,
    id: String,
    question: String,
    hypothesis: String,
    #[serde(serialize_with = "context_in_index_order")]
    context: BTreeMap<String, String>,
    proof: Option<String>,
    #[serde(default)]
    meta: RecordMeta,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RecordMeta {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sequential: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    demo_candidates: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    demo_hint: Option<String>,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

// `sent2` before `sent10`.
fn context_in_index_order<S: Serializer>(ctx: &BTreeMap<String, String>, s: S) -> Result<S::Ok, S::Error> {
    let mut entries: Vec<_> = ctx.iter().collect();
    entries.sort_by_key(|(k, _)| match k.parse::<NodeId>() {
        Ok(NodeId::Sentence(i)) => (i, (*k).clone()),
        _ => (u32::MAX, (*k).clone()),
    });
    let mut map = s.serialize_map(Some(entries.len()))?;
    for (k, v) in entries {
        map.serialize_entry(k, v)?;
    }
    map.end()
}

fn to_instance(record: Record, line: usize) -> Result<Instance, DatasetError> {
    let malformed = |message: String| DatasetError::MalformedRecord { line, message };
    if record.format_version != FORMAT_VERSION {
        return Err(malformed(format!("unsupported format_version {}", record.format_version)));
    }
    let mut context = BTreeMap::new();
    for (key, text) in record.context {
        match key.parse::<NodeId>() {
            Ok(NodeId::Sentence(i)) => {
                context.insert(i, text);
            }
            _ => return Err(malformed(format!("context key `{key}` is not a sentence id"))),
        }
    }
    let gold = match record.proof.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(text) => Some(
            parse_proof_chain(text).map_err(|e| DatasetError::InvalidGold { line, message: e.to_string() })?,
        ),
    };
    let meta = record.meta;
    let instance = Instance {
        id: record.id,
        question: record.question,
        hypothesis: record.hypothesis,
        context,
        gold,
        meta: InstanceMeta {
            dataset: meta.dataset,
            depth: meta.depth,
            sequential: meta.sequential,
            demo_candidates: meta.demo_candidates,
            demo_hint: meta.demo_hint,
        },
    };
    let dangling = instance.dangling_gold_sentences();
    if !dangling.is_empty() {
        let names: Vec<String> = dangling.iter().map(ToString::to_string).collect();
        return Err(DatasetError::InvalidGold {
            line,
            message: format!("references sentences absent from context: {}", names.join(", ")),
        });
    }
    Ok(instance)
}

fn excluded(instance: &Instance) -> bool {
    instance.meta.dataset.eq_ignore_ascii_case(ENTAILMENT_BANK)
        && instance.gold.as_ref().is_some_and(|g| g.depth() == 1)
}

/// Parses JSONL text. Blank lines are skipped; line numbers in errors are
/// 1-based.
pub fn parse_instances(text: &str) -> Result<Vec<Instance>, DatasetError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(raw)
            .map_err(|e| DatasetError::MalformedRecord { line, message: e.to_string() })?;
        let instance = to_instance(record, line)?;
        if excluded(&instance) {
            tracing::debug!(id = %instance.id, "skipping single-step entailment instance");
            continue;
        }
        out.push(instance);
    }
    Ok(out)
}

pub fn load_instances(path: impl AsRef<Path>) -> Result<Vec<Instance>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.into(), source })?;
    parse_instances(&text)
}

/// One normalized JSONL line for `instance`.
pub fn record_line(instance: &Instance) -> String {
    let record = Record {
        format_version: FORMAT_VERSION,
        id: instance.id.clone(),
        question: instance.question.clone(),
        hypothesis: instance.hypothesis.clone(),
        context: instance.context.iter().map(|(i, t)| (format!("sent{i}"), t.clone())).collect(),
        proof: instance.gold.as_ref().map(serialize_chain),
        meta: RecordMeta {
            dataset: instance.meta.dataset.clone(),
            depth: instance.meta.depth,
            sequential: instance.meta.sequential,
            demo_candidates: instance.meta.demo_candidates.clone(),
            demo_hint: instance.meta.demo_hint.clone(),
        },
    };
    serde_json::to_string(&record).expect("records always serialize")
}

pub fn dump_instances(path: impl AsRef<Path>, instances: &[Instance]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut text = String::new();
    for instance in instances {
        text.push_str(&record_line(instance));
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| DatasetError::Io { path: path.into(), source })
}
