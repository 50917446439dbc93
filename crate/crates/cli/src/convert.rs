//! The `convert` command: upstream dataset releases to the normalized JSONL
//! format.
//!
//! Only the EntailmentBank release is handled. Its records carry the context
//! either as `meta.triples` (`{"sent1": "..."}`) or as one string of
//! `sentN: text` segments, the proof in the same chain notation the engine
//! parses, and a `depth_of_proof` label. Intermediate conclusions missing from
//! the proof string are filled from `meta.intermediate_conclusions`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use anyhow::{anyhow, bail, Context, Result};
use regex::Regex;
use serde::Deserialize;
use strucprove::datasets::{classify, dump_instances, ENTAILMENT_BANK};
use strucprove::proof::{parse_proof_chain, ProofGraph, ProofStep};
use strucprove::{Instance, InstanceMeta, NodeId};

#[derive(Debug, Deserialize)]
struct EbRecord {
    id: String,
    #[serde(default)]
    question: String,
    hypothesis: String,
    #[serde(default)]
    context: String,
    #[serde(default)]
    proof: String,
    depth_of_proof: Option<u32>,
    #[serde(default)]
    meta: EbMeta,
}

#[derive(Debug, Default, Deserialize)]
struct EbMeta {
    #[serde(default)]
    triples: BTreeMap<String, String>,
    #[serde(default)]
    intermediate_conclusions: BTreeMap<String, String>,
}

fn sentence_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"sent(\d+):").expect("static regex"))
}

/// Splits `sent1: a b sent2: c` into indexed sentences.
pub fn split_context(text: &str) -> BTreeMap<u32, String> {
    let marks: Vec<_> = sentence_marker().captures_iter(text).collect();
    let mut out = BTreeMap::new();
    for (i, cap) in marks.iter().enumerate() {
        let whole = cap.get(0).expect("group 0");
        let end = marks.get(i + 1).map_or(text.len(), |next| next.get(0).expect("group 0").start());
        let index: u32 = cap[1].parse().expect("digits");
        out.insert(index, text[whole.end()..end].trim().to_string());
    }
    out
}

fn fill_texts(graph: ProofGraph, texts: &BTreeMap<String, String>) -> Result<ProofGraph> {
    let steps = graph
        .steps()
        .iter()
        .map(|s| match texts.get(&s.conclusion().to_string()) {
            Some(t) if s.text().is_empty() => ProofStep::new(s.premises().to_vec(), s.conclusion(), t.as_str()),
            _ => Ok(s.clone()),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProofGraph::new(steps)?)
}

fn to_instance(record: EbRecord) -> Result<Instance> {
    let context = if record.meta.triples.is_empty() {
        split_context(&record.context)
    } else {
        let mut ctx = BTreeMap::new();
        for (key, text) in record.meta.triples {
            match key.parse::<NodeId>() {
                Ok(NodeId::Sentence(i)) => {
                    ctx.insert(i, text);
                }
                _ => bail!("triple key `{key}` is not a sentence id"),
            }
        }
        ctx
    };
    if context.is_empty() {
        bail!("no context sentences");
    }
    let gold = match record.proof.trim() {
        "" => None,
        text => Some(fill_texts(parse_proof_chain(text)?, &record.meta.intermediate_conclusions)?),
    };
    let mut inst = Instance {
        id: record.id,
        question: record.question,
        hypothesis: record.hypothesis,
        context,
        gold,
        meta: InstanceMeta { dataset: ENTAILMENT_BANK.into(), depth: record.depth_of_proof, ..InstanceMeta::default() },
    };
    if inst.gold.is_some() {
        inst.meta.sequential = Some(classify(&inst)?.sequential);
    }
    Ok(inst)
}

/// Converts EntailmentBank JSONL text; errors name the 1-based line.
pub fn parse_entailment_bank(text: &str) -> Result<Vec<Instance>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str::<EbRecord>(line)
                .map_err(|e| anyhow!(e))
                .and_then(to_instance)
                .with_context(|| format!("line {}", i + 1))
        })
        .collect()
}

pub fn convert_entailment_bank(input: &Path, output: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let instances = parse_entailment_bank(&text).with_context(|| input.display().to_string())?;
    dump_instances(output, &instances)?;
    Ok(instances.len())
}
