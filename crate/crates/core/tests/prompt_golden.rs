//! Rendered prompts compared byte-for-byte with checked-in transcripts.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the files after an intended template
//! change.

use std::path::PathBuf;

use strucprove::datasets::fixture;
use strucprove::llm::{render_prompt, PromptExtras, PromptKind};
use strucprove::proof::{parse_step_line, NodeId};
use strucprove::Demonstration;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check(name: &str, rendered: &str) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, rendered).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(rendered, want, "{name} drifted from its golden file");
}

fn mars_demo() -> Demonstration {
    Demonstration::new(fixture("mars").unwrap()).unwrap()
}

fn sents(ids: &[u32]) -> Vec<NodeId> {
    ids.iter().map(|i| NodeId::sent(*i)).collect()
}

fn transcript(kind: PromptKind, inst: &str, extras: PromptExtras) -> String {
    let demo = mars_demo();
    render_prompt(kind, &fixture(inst).unwrap(), &[&demo], &extras).unwrap().transcript()
}

#[test]
fn retrieval_prompt_matches_golden() {
    let text = transcript(PromptKind::Retrieve, "bee", PromptExtras { hint: Some(String::new()), ..Default::default() });
    assert!(text.contains("Retrieval sentences (at least 3): sent4, sent20, sent21, sent23"));
    check("retrieve_bee.txt", &text);
}

#[test]
fn proposal_prompt_matches_golden() {
    let extras = PromptExtras { retained: Some(sents(&[4, 7, 12, 21, 23, 24])), ..Default::default() };
    let text = transcript(PromptKind::Propose, "bee", extras);
    assert!(text.contains("Possible Next Reasoning: sent20 & sent4 -> int1: gravity causes the planets in the solar system to orbit the sun"));
    check("propose_bee.txt", &text);
}

#[test]
fn evaluation_prompt_matches_golden() {
    let extras = PromptExtras {
        retained: Some(sents(&[1, 8, 12, 15])),
        candidate: Some(parse_step_line("sent1 & sent8 -> int1: scales cover the body of a fish").unwrap()),
        ..Default::default()
    };
    let text = transcript(PromptKind::Evaluate, "fish-scales", extras);
    assert!(text.contains("Surely: 85-99, Likely: 50-84, Impossible: 0-49"));
    assert!(text.contains("Evaluate: 99\n"));
    check("evaluate_fish.txt", &text);
}

#[test]
fn hint_prompt_matches_golden() {
    let extras = PromptExtras {
        conclusion: Some((NodeId::int(1), "scales cover the body of a fish".into())),
        ..Default::default()
    };
    let text = transcript(PromptKind::Hint, "fish-scales", extras);
    assert!(text.contains("Missing: What is missing is to specifically state that Mars is one of the planets in the solar system."));
    assert!(text.ends_with("Missing:"));
    check("hint_fish.txt", &text);
}

#[test]
fn rendering_is_repeatable() {
    let extras = PromptExtras { hint: Some("mars is a planet".into()), ..Default::default() };
    let a = transcript(PromptKind::Retrieve, "moon", extras.clone());
    let b = transcript(PromptKind::Retrieve, "moon", extras);
    assert_eq!(a.as_bytes(), b.as_bytes());
}
