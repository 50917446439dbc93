//! Prompt templates and rendering.
//!
//! Each template lives in `templates/*.txt` with four `@@`-marked sections:
//! the system line, the per-demonstration block, the separator placed after
//! each demonstration, and the question block. `{name}` placeholders are
//! filled in a single pass, so substituted text is never re-scanned.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{ChatExchange, ChatMessage, LlmError};
use crate::instance::{Demonstration, Instance};
use crate::proof::{NodeId, ProofStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    GuessProof,
    Retrieve,
    Propose,
    Evaluate,
    Hint,
}

impl PromptKind {
    pub const ALL: [PromptKind; 5] =
        [PromptKind::GuessProof, PromptKind::Retrieve, PromptKind::Propose, PromptKind::Evaluate, PromptKind::Hint];

    /// Identifies which template produced an exchange by its system line.
    pub fn detect(exchange: &ChatExchange) -> Option<PromptKind> {
        let system = exchange.system_text()?;
        Template::ALL.iter().find(|t| t.text().system == system).map(|t| t.kind())
    }
}

/// How the hint prompt is phrased.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintStyle {
    /// "what is still missing" (answer after `Missing:`)
    #[default]
    Missing,
    /// "what the next reasoning step should be" (answer after `Next:`)
    WhatsNext,
}

impl HintStyle {
    pub fn marker(self) -> &'static str {
        match self {
            HintStyle::Missing => "Missing:",
            HintStyle::WhatsNext => "Next:",
        }
    }
}

/// Concrete template files. `Hint` has two phrasings, so there is one more
/// template than prompt kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Template {
    Guess,
    Retrieve,
    Propose,
    Evaluate,
    Hint,
    WhatsNext,
}

struct TemplateText {
    system: String,
    example: String,
    separator: String,
    question: String,
}

impl Template {
    pub const COUNT: usize = 6;
    const ALL: [Template; Template::COUNT] = [
        Template::Guess,
        Template::Retrieve,
        Template::Propose,
        Template::Evaluate,
        Template::Hint,
        Template::WhatsNext,
    ];

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    pub fn kind(self) -> PromptKind {
        match self {
            Template::Guess => PromptKind::GuessProof,
            Template::Retrieve => PromptKind::Retrieve,
            Template::Propose => PromptKind::Propose,
            Template::Evaluate => PromptKind::Evaluate,
            Template::Hint | Template::WhatsNext => PromptKind::Hint,
        }
    }

    fn for_kind(kind: PromptKind, style: HintStyle) -> Template {
        match (kind, style) {
            (PromptKind::GuessProof, _) => Template::Guess,
            (PromptKind::Retrieve, _) => Template::Retrieve,
            (PromptKind::Propose, _) => Template::Propose,
            (PromptKind::Evaluate, _) => Template::Evaluate,
            (PromptKind::Hint, HintStyle::Missing) => Template::Hint,
            (PromptKind::Hint, HintStyle::WhatsNext) => Template::WhatsNext,
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Template::Guess => include_str!("../../templates/guess.txt"),
            Template::Retrieve => include_str!("../../templates/retrieve.txt"),
            Template::Propose => include_str!("../../templates/propose.txt"),
            Template::Evaluate => include_str!("../../templates/evaluate.txt"),
            Template::Hint => include_str!("../../templates/hint.txt"),
            Template::WhatsNext => include_str!("../../templates/whats_next.txt"),
        }
    }

    fn text(self) -> &'static TemplateText {
        static PARSED: OnceLock<Vec<TemplateText>> = OnceLock::new();
        &PARSED.get_or_init(|| Template::ALL.iter().map(|t| parse_template(t.source())).collect())[self.index()]
    }

    pub fn system(self) -> &'static str {
        &self.text().system
    }
}

fn parse_template(source: &str) -> TemplateText {
    let mut sections: Vec<(&str, Vec<&str>)> = Vec::new();
    for line in source.lines() {
        if let Some(name) = line.strip_prefix("@@") {
            sections.push((name.trim(), Vec::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push(line);
        }
    }
    let get = |name: &str| {
        sections
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, lines)| lines.join("\n"))
            .unwrap_or_else(|| panic!("template section `{name}` missing"))
    };
    TemplateText { system: get("system"), example: get("example"), separator: get("separator"), question: get("question") }
}

fn fill(template: &str, vars: &[(&str, &str)]) -> Result<String, LlmError> {
    let mut out = String::with_capacity(template.len() * 2);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let end = after
            .find('}')
            .ok_or_else(|| LlmError::Template(format!("unclosed placeholder in `{}`", &rest[start..])))?;
        let name = &after[..end];
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| LlmError::Template(format!("no value for placeholder `{name}`")))?;
        out.push_str(value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Kind-specific inputs for [`render_prompt`].
#[derive(Debug, Clone, Default)]
pub struct PromptExtras {
    /// Retrieve: the current proof hint (may be empty).
    pub hint: Option<String>,
    /// Propose/Evaluate: the retained sentence subset.
    pub retained: Option<Vec<NodeId>>,
    /// Propose/Evaluate: intermediate conclusions already constructed, listed
    /// after the retained sentences.
    pub intermediates: Vec<(NodeId, String)>,
    /// Evaluate: the step being scored.
    pub candidate: Option<ProofStep>,
    /// Hint: the intermediate conclusion to compare with the hypothesis.
    pub conclusion: Option<(NodeId, String)>,
    pub hint_style: HintStyle,
}

fn sentence_lines(inst: &Instance, ids: impl IntoIterator<Item = NodeId>) -> Vec<String> {
    ids.into_iter()
        .filter_map(|id| inst.sentence(id).map(|text| format!("{id}: {text}")))
        .collect()
}

fn full_context(inst: &Instance) -> String {
    sentence_lines(inst, inst.sentence_ids()).join("\n")
}

fn proof_line(steps: &[ProofStep]) -> String {
    steps.iter().map(|s| format!("{s};")).collect::<Vec<_>>().join(" ")
}

fn demo_candidates(demo: &Demonstration) -> Vec<NodeId> {
    match &demo.instance().meta.demo_candidates {
        Some(ids) => {
            let mut ids: Vec<NodeId> = ids.iter().filter(|&&i| i >= 1).map(|&i| NodeId::Sentence(i)).collect();
            ids.sort();
            ids.dedup();
            ids
        }
        None => demo.gold().leaves().into_iter().collect(),
    }
}

/// The step shown in a demonstration's hint block: its first intermediate
/// conclusion, or its first step when it has none.
fn demo_conclusion_step(demo: &Demonstration) -> &ProofStep {
    let steps = demo.gold().steps();
    steps.iter().find(|s| s.conclusion().is_intermediate()).unwrap_or(&steps[0])
}

fn conclusion_line(node: NodeId, text: &str) -> String {
    if text.is_empty() {
        node.to_string()
    } else {
        format!("{node}: {text}")
    }
}

fn render_demo(template: Template, demo: &Demonstration) -> Result<String, LlmError> {
    let inst = demo.instance();
    let gold = demo.gold();
    let t = template.text();
    let base = [("question", inst.question.as_str()), ("hypothesis", inst.hypothesis.as_str())];
    match template {
        Template::Guess | Template::Retrieve => {
            let premises = full_context(inst);
            let retrieved = gold.leaves().iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
            let proof = proof_line(gold.steps());
            fill(
                &t.example,
                &[base[0], base[1], ("premises", &premises), ("retrieved", &retrieved), ("proof", &proof)],
            )
        }
        Template::Propose | Template::Evaluate => {
            let premises = sentence_lines(inst, demo_candidates(demo)).join("\n");
            let step = gold.steps()[0].to_string();
            fill(&t.example, &[base[0], base[1], ("premises", &premises), ("step", &step), ("score", "99")])
        }
        Template::Hint | Template::WhatsNext => {
            let step = demo_conclusion_step(demo);
            let conclusion = conclusion_line(step.conclusion(), step.text());
            let answer = if template == Template::Hint {
                inst.meta.demo_hint.clone().unwrap_or_else(|| {
                    format!("What is missing is to connect this conclusion with the hypothesis that {}.", inst.hypothesis)
                })
            } else {
                gold.steps()
                    .iter()
                    .find(|s| s.premises().contains(&step.conclusion()))
                    .map(ToString::to_string)
                    .unwrap_or_else(|| "Finish".into())
            };
            fill(&t.example, &[base[0], base[1], ("conclusion", &conclusion), ("answer", &answer)])
        }
    }
}

/// Renders the prompt for `kind` about `inst`, with one block per
/// demonstration. Output is a pure function of the inputs.
pub fn render_prompt(
    kind: PromptKind,
    inst: &Instance,
    demos: &[&Demonstration],
    extras: &PromptExtras,
) -> Result<ChatExchange, LlmError> {
    let template = Template::for_kind(kind, extras.hint_style);
    let t = template.text();
    let mut body = String::new();
    for demo in demos {
        let mut failure = None;
        let block = demo.block(template, |d| {
            render_demo(template, d).unwrap_or_else(|e| {
                failure = Some(e);
                String::new()
            })
        });
        if let Some(e) = failure {
            return Err(e);
        }
        body.push_str(block);
        body.push('\n');
        body.push_str(&t.separator);
        body.push('\n');
    }

    let q = [("question", inst.question.as_str()), ("hypothesis", inst.hypothesis.as_str())];
    let with_intermediates = |retained: &[NodeId]| {
        let mut lines = sentence_lines(inst, retained.iter().copied());
        lines.extend(extras.intermediates.iter().map(|(id, text)| conclusion_line(*id, text)));
        lines.join("\n")
    };
    let question = match template {
        Template::Guess => fill(&t.question, &[q[0], q[1], ("premises", &full_context(inst))])?,
        Template::Retrieve => {
            let hint = extras.hint.as_deref().ok_or(LlmError::MissingExtra("hint"))?.trim();
            let hint_line = if hint.is_empty() { String::new() } else { format!("Proof hint: {hint}\n") };
            fill(&t.question, &[q[0], q[1], ("hint_line", &hint_line), ("premises", &full_context(inst))])?
        }
        Template::Propose => {
            let retained = extras.retained.as_deref().ok_or(LlmError::MissingExtra("retained"))?;
            fill(&t.question, &[q[0], q[1], ("premises", &with_intermediates(retained))])?
        }
        Template::Evaluate => {
            let retained = extras.retained.as_deref().ok_or(LlmError::MissingExtra("retained"))?;
            let step = extras.candidate.as_ref().ok_or(LlmError::MissingExtra("candidate"))?.to_string();
            fill(&t.question, &[q[0], q[1], ("premises", &with_intermediates(retained)), ("step", &step)])?
        }
        Template::Hint | Template::WhatsNext => {
            let (node, text) = extras.conclusion.as_ref().ok_or(LlmError::MissingExtra("conclusion"))?;
            fill(&t.question, &[q[0], q[1], ("conclusion", &conclusion_line(*node, text))])?
        }
    };
    body.push_str(&question);
    Ok(ChatExchange::new(vec![ChatMessage::system(t.system.clone()), ChatMessage::user(body)]))
}

/// The part of a rendered prompt after the last `[Question]` marker.
pub fn question_block(text: &str) -> &str {
    match text.rfind("[Question]") {
        Some(i) => &text[i + "[Question]".len()..],
        None => text,
    }
}
