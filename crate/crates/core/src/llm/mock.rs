//! Offline clients: a scripted mock for unit tests and a gold-backed oracle
//! for end-to-end runs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::extract::extract_steps;
use super::prompt::{question_block, PromptKind};
use super::{approx_tokens, ChatExchange, LlmClient, LlmError, LlmReply, Usage};
use crate::demo::Fnv;
use crate::instance::Instance;
use crate::proof::{NodeId, ProofGraph, ProofStep};

fn reply(exchange: &ChatExchange, texts: Vec<String>) -> LlmReply {
    let prompt_tokens = exchange.messages.iter().map(|m| approx_tokens(&m.content)).sum();
    let completion_tokens = texts.iter().map(|t| approx_tokens(t)).sum();
    LlmReply { texts, usage: Usage { prompt_tokens, completion_tokens }, cached: false }
}

/// Selects which scripted rule answers an exchange.
#[derive(Debug, Clone, PartialEq)]
pub enum Matcher {
    Any,
    Kind(PromptKind),
    /// Substring of the last user message.
    Contains(String),
}

impl Matcher {
    fn matches(&self, exchange: &ChatExchange) -> bool {
        match self {
            Matcher::Any => true,
            Matcher::Kind(k) => PromptKind::detect(exchange) == Some(*k),
            Matcher::Contains(s) => exchange.last_user_text().contains(s.as_str()),
        }
    }
}

struct Rule {
    matcher: Matcher,
    replies: Vec<String>,
    next: AtomicUsize,
}

/// Answers from a fixed script. Rules are tried in insertion order; each
/// rule cycles through its replies. In strict mode an unmatched exchange is a
/// `BadResponse`, otherwise the fallback reply is returned.
pub struct ScriptedMock {
    rules: Vec<Rule>,
    fallback: Option<String>,
    calls: Mutex<Vec<ChatExchange>>,
}

impl ScriptedMock {
    pub fn strict() -> Self {
        Self { rules: Vec::new(), fallback: None, calls: Mutex::new(Vec::new()) }
    }

    pub fn lenient(fallback: impl Into<String>) -> Self {
        Self { fallback: Some(fallback.into()), ..Self::strict() }
    }

    pub fn on(mut self, matcher: Matcher, reply: impl Into<String>) -> Self {
        self.rules.push(Rule { matcher, replies: vec![reply.into()], next: AtomicUsize::new(0) });
        self
    }

    pub fn on_cycle(mut self, matcher: Matcher, replies: Vec<String>) -> Self {
        assert!(!replies.is_empty(), "a rule needs at least one reply");
        self.rules.push(Rule { matcher, replies, next: AtomicUsize::new(0) });
        self
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn calls(&self) -> Vec<ChatExchange> {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl LlmClient for ScriptedMock {
    fn complete(&self, exchange: &ChatExchange) -> Result<LlmReply, LlmError> {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).push(exchange.clone());
        let n = exchange.params.n_samples.max(1) as usize;
        let texts = match self.rules.iter().find(|r| r.matcher.matches(exchange)) {
            Some(rule) => (0..n)
                .map(|_| rule.replies[rule.next.fetch_add(1, Ordering::Relaxed) % rule.replies.len()].clone())
                .collect(),
            None => match &self.fallback {
                Some(f) => vec![f.clone(); n],
                None => {
                    return Err(LlmError::BadResponse(format!(
                        "unscripted prompt: {}",
                        exchange.last_user_text().lines().last().unwrap_or("")
                    )))
                }
            },
        };
        Ok(reply(exchange, texts))
    }
}

/// Noise model for the oracle. Each proposal is a gold step with probability
/// `gold_probability`, otherwise a distractor that extends the latest
/// intermediate with an irrelevant sentence. Scores are jittered by up to
/// `score_noise` toward the middle of the range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub gold_probability: f64,
    pub score_noise: u8,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { gold_probability: 0.6, score_noise: 60, seed: 0 }
    }
}

const GOLD_SCORE: u8 = 99;
const OFF_SCORE: u8 = 10;

/// Answers every prompt from the gold proof of the instance named by the
/// prompt's hypothesis line.
pub struct OracleMock {
    golds: HashMap<String, Instance>,
    noise: Option<NoiseConfig>,
    calls: AtomicUsize,
}

fn clean_text(text: &str) -> String {
    text.trim().chars().map(|c| match c {
        ';' => ',',
        '\n' | '\r' => ' ',
        c => c,
    })
    .collect()
}

/// What the oracle can read back out of a rendered question block.
struct Parsed<'a> {
    inst: &'a Instance,
    gold: &'a ProofGraph,
    /// Sentences listed as candidate premises.
    sentences: BTreeSet<NodeId>,
    /// Listed intermediates: prompt id to gold id (when the text is gold).
    intermediates: BTreeMap<NodeId, Option<NodeId>>,
}

impl<'a> Parsed<'a> {
    /// Gold nodes already available on this branch.
    fn constructed(&self) -> BTreeSet<NodeId> {
        self.intermediates.values().flatten().copied().collect()
    }

    fn to_prompt(&self, gold_node: NodeId) -> Option<NodeId> {
        if gold_node.is_sentence() {
            return Some(gold_node);
        }
        self.intermediates.iter().find(|(_, g)| **g == Some(gold_node)).map(|(p, _)| *p)
    }

    fn to_gold(&self, prompt_node: NodeId) -> Option<NodeId> {
        match prompt_node {
            NodeId::Sentence(_) => Some(prompt_node),
            NodeId::Intermediate(_) => self.intermediates.get(&prompt_node).copied().flatten(),
            NodeId::Hypothesis => None,
        }
    }

    /// Gold steps not yet built whose premises are all on offer, in gold
    /// order.
    fn ready(&self) -> Vec<&'a ProofStep> {
        let built = self.constructed();
        self.gold
            .steps()
            .iter()
            .filter(|s| !built.contains(&s.conclusion()))
            .filter(|s| {
                s.premises().iter().all(|p| match p {
                    NodeId::Sentence(_) => self.sentences.contains(p),
                    _ => built.contains(p),
                })
            })
            .collect()
    }

    /// A gold step rewritten with this branch's intermediate ids.
    fn render_gold(&self, step: &ProofStep) -> String {
        let premises: Vec<String> =
            step.premises().iter().map(|p| self.to_prompt(*p).unwrap_or(*p).to_string()).collect();
        let conclusion = match step.conclusion() {
            NodeId::Hypothesis => "hypothesis".to_string(),
            _ => {
                let next = self.intermediates.keys().filter_map(|n| n.index()).max().unwrap_or(0) + 1;
                format!("int{next}: {}", clean_text(step.text()))
            }
        };
        format!("{} -> {conclusion}", premises.join(" & "))
    }

    fn is_gold_consistent(&self, candidate: &ProofStep) -> bool {
        let built = self.constructed();
        let mapped: Option<BTreeSet<NodeId>> = candidate.premises().iter().map(|p| self.to_gold(*p)).collect();
        let Some(mapped) = mapped else { return false };
        self.gold.steps().iter().any(|g| {
            !built.contains(&g.conclusion())
                && g.premise_set() == mapped
                && g.concludes_hypothesis() == candidate.concludes_hypothesis()
        })
    }
}

impl OracleMock {
    pub fn new(instances: impl IntoIterator<Item = Instance>) -> Self {
        let golds = instances
            .into_iter()
            .filter(|i| i.gold.is_some())
            .map(|i| (i.hypothesis.trim().to_string(), i))
            .collect();
        Self { golds, noise: None, calls: AtomicUsize::new(0) }
    }

    pub fn with_noise(mut self, noise: NoiseConfig) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    fn parse<'a>(&'a self, question: &str) -> Result<Parsed<'a>, LlmError> {
        let hypothesis = question
            .lines()
            .find_map(|l| l.strip_prefix("Hypothesis:"))
            .map(str::trim)
            .ok_or_else(|| LlmError::BadResponse("oracle: no hypothesis line".into()))?;
        let inst = self
            .golds
            .get(hypothesis)
            .ok_or_else(|| LlmError::BadResponse(format!("oracle: unknown hypothesis `{hypothesis}`")))?;
        let gold = inst.gold.as_ref().expect("filtered to gold");
        let gold_texts: Vec<(String, NodeId)> = gold
            .steps()
            .iter()
            .filter(|s| s.conclusion().is_intermediate())
            .map(|s| (clean_text(s.text()), s.conclusion()))
            .collect();
        let mut sentences = BTreeSet::new();
        let mut intermediates = BTreeMap::new();
        for line in question.lines() {
            let line = line.strip_prefix("Intermediate Conclusion:").unwrap_or(line).trim();
            let Some((id, text)) = line.split_once(':') else { continue };
            let Ok(node) = id.trim().parse::<NodeId>() else { continue };
            match node {
                NodeId::Sentence(_) => {
                    sentences.insert(node);
                }
                NodeId::Intermediate(_) => {
                    let text = text.trim();
                    let gold_id = gold_texts.iter().find(|(t, _)| t == text).map(|(_, g)| *g);
                    intermediates.insert(node, gold_id);
                }
                NodeId::Hypothesis => {}
            }
        }
        Ok(Parsed { inst, gold, sentences, intermediates })
    }

    fn rng(&self, exchange: &ChatExchange, noise: &NoiseConfig) -> ChaCha8Rng {
        let mut h = Fnv::new();
        h.write(exchange.cache_key().as_bytes());
        ChaCha8Rng::seed_from_u64(noise.seed ^ h.finish())
    }

    fn answer(&self, exchange: &ChatExchange) -> Result<Vec<String>, LlmError> {
        let kind = PromptKind::detect(exchange)
            .ok_or_else(|| LlmError::BadResponse("oracle: unrecognized prompt".into()))?;
        let question = question_block(exchange.last_user_text());
        let p = self.parse(question)?;
        let n = exchange.params.n_samples.max(1) as usize;
        let mut rng = self.noise.as_ref().map(|cfg| self.rng(exchange, cfg));
        let leaves = p.gold.leaves();
        let texts = match kind {
            PromptKind::GuessProof => {
                let steps: Vec<String> = p.gold.steps().iter().map(|s| format!("{s};")).collect();
                vec![format!("Proof: {}", steps.join(" ")); n]
            }
            PromptKind::Retrieve => (0..n)
                .map(|_| {
                    let mut ids: BTreeSet<NodeId> = leaves.clone();
                    if let Some(rng) = rng.as_mut() {
                        let others: Vec<NodeId> = p.inst.sentence_ids().filter(|s| !leaves.contains(s)).collect();
                        ids.extend(others.choose_multiple(rng, 2).copied());
                    }
                    let list: Vec<String> = ids.iter().map(ToString::to_string).collect();
                    format!("Retrieval sentences (at least 3): {}", list.join(", "))
                })
                .collect(),
            PromptKind::Propose => {
                let ready = p.ready();
                (0..n)
                    .map(|i| match rng.as_mut() {
                        None => ready.get(i % ready.len().max(1)).map_or_else(|| "Finish".into(), |s| p.render_gold(s)),
                        Some(rng) => {
                            let noise = self.noise.expect("rng implies noise");
                            if !ready.is_empty() && rng.gen_bool(noise.gold_probability) {
                                p.render_gold(ready.choose(rng).expect("nonempty"))
                            } else {
                                distractor(&p, &leaves, rng).unwrap_or_else(|| "Finish".into())
                            }
                        }
                    })
                    .collect()
            }
            PromptKind::Evaluate => {
                let line = question
                    .lines()
                    .rev()
                    .find_map(|l| l.strip_prefix("Possible Next Reasoning:"))
                    .ok_or_else(|| LlmError::BadResponse("oracle: no candidate step".into()))?;
                let consistent = extract_steps(line).steps.first().is_some_and(|s| p.is_gold_consistent(s));
                (0..n)
                    .map(|_| {
                        let score = match (rng.as_mut(), consistent) {
                            (None, true) => GOLD_SCORE,
                            (None, false) => OFF_SCORE,
                            (Some(rng), true) => GOLD_SCORE - rng.gen_range(0..=self.noise.unwrap().score_noise),
                            (Some(rng), false) => OFF_SCORE + rng.gen_range(0..=self.noise.unwrap().score_noise),
                        };
                        format!("Evaluate: {score}")
                    })
                    .collect()
            }
            PromptKind::Hint => {
                let whats_next = exchange.system_text().is_some_and(|s| s.contains("next reasoning step"));
                let text = if whats_next {
                    let built = p.constructed();
                    let next = p.gold.steps().iter().find(|s| s.premises().iter().any(|x| built.contains(x)));
                    format!("Next: {}", next.map_or_else(|| "Finish".into(), |s| p.render_gold(s)))
                } else {
                    format!("Missing: What is missing is to connect this conclusion with the hypothesis that {}.", p.inst.hypothesis)
                };
                vec![text; n]
            }
        };
        Ok(texts)
    }
}

/// The latest intermediate joined with a random non-gold sentence, or two
/// random sentences when nothing has been built yet.
fn distractor(p: &Parsed<'_>, gold_leaves: &BTreeSet<NodeId>, rng: &mut ChaCha8Rng) -> Option<String> {
    let non_gold: Vec<NodeId> = p.inst.sentence_ids().filter(|s| !gold_leaves.contains(s)).collect();
    let next = p.intermediates.keys().filter_map(|n| n.index()).max().unwrap_or(0) + 1;
    let (a, b) = match p.intermediates.keys().next_back() {
        Some(&latest) => (latest, *non_gold.choose(rng)?),
        None => {
            let all: Vec<NodeId> = p.inst.sentence_ids().collect();
            let pair: Vec<NodeId> = all.choose_multiple(rng, 2).copied().collect();
            if pair.len() < 2 {
                return None;
            }
            (pair[0], pair[1])
        }
    };
    Some(format!("{a} & {b} -> int{next}: an unsupported claim drawn from {a} and {b}"))
}

impl LlmClient for OracleMock {
    fn complete(&self, exchange: &ChatExchange) -> Result<LlmReply, LlmError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(reply(exchange, self.answer(exchange)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{fixture, fixtures};
    use crate::llm::{render_prompt, ChatMessage, ChatParams, PromptExtras};
    use crate::proof::parse_step_line;

    #[test]
    fn scripted_echo() {
        let mock = ScriptedMock::strict().on(Matcher::Any, "Evaluate: 90");
        let r = mock.complete(&ChatExchange::new(vec![ChatMessage::user("x")])).unwrap();
        assert_eq!(r.texts, vec!["Evaluate: 90"]);
        assert!(!r.cached);
    }

    #[test]
    fn strict_rejects_unscripted() {
        let mock = ScriptedMock::strict().on(Matcher::Contains("zzz".into()), "no");
        let err = mock.complete(&ChatExchange::new(vec![ChatMessage::user("x")])).unwrap_err();
        assert!(matches!(err, LlmError::BadResponse(_)));
        let lenient = ScriptedMock::lenient("Finish");
        assert_eq!(lenient.complete(&ChatExchange::new(vec![ChatMessage::user("x")])).unwrap().texts, ["Finish"]);
    }

    #[test]
    fn scripted_cycles_and_fills_samples() {
        let mock = ScriptedMock::strict().on_cycle(Matcher::Any, vec!["a".into(), "b".into()]);
        let x = ChatExchange::new(vec![ChatMessage::user("x")])
            .with_params(ChatParams { n_samples: 3, ..ChatParams::default() });
        assert_eq!(mock.complete(&x).unwrap().texts, ["a", "b", "a"]);
        assert_eq!(mock.call_count(), 1);
    }

    #[test]
    fn oracle_walks_the_mars_proof() {
        let mars = fixture("mars").unwrap();
        let oracle = OracleMock::new(fixtures());
        let retrieve = render_prompt(
            PromptKind::Retrieve,
            &mars,
            &[],
            &PromptExtras { hint: Some(String::new()), ..Default::default() },
        )
        .unwrap();
        let r = oracle.complete(&retrieve).unwrap();
        assert_eq!(r.texts[0], "Retrieval sentences (at least 3): sent4, sent20, sent21, sent23");

        let retained: Vec<NodeId> = mars.gold.as_ref().unwrap().leaves().into_iter().collect();
        let propose = render_prompt(
            PromptKind::Propose,
            &mars,
            &[],
            &PromptExtras { retained: Some(retained.clone()), ..Default::default() },
        )
        .unwrap();
        let first = oracle.complete(&propose).unwrap().texts[0].clone();
        let step = parse_step_line(&first).unwrap();
        assert!(!step.uses_intermediate());

        let evaluate = |candidate: &str| {
            let x = render_prompt(
                PromptKind::Evaluate,
                &mars,
                &[],
                &PromptExtras {
                    retained: Some(retained.clone()),
                    candidate: Some(parse_step_line(candidate).unwrap()),
                    ..Default::default()
                },
            )
            .unwrap();
            oracle.complete(&x).unwrap().texts[0].clone()
        };
        assert_eq!(evaluate(&first), "Evaluate: 99");
        assert_eq!(evaluate("sent4 & sent21 -> int1: nonsense"), "Evaluate: 10");
    }

    #[test]
    fn oracle_finishes_when_nothing_is_ready() {
        let bee = fixture("bee").unwrap();
        let oracle = OracleMock::new([bee.clone()]);
        let x = render_prompt(
            PromptKind::Propose,
            &bee,
            &[],
            &PromptExtras { retained: Some(vec![NodeId::sent(1)]), ..Default::default() },
        )
        .unwrap();
        assert_eq!(oracle.complete(&x).unwrap().texts, ["Finish"]);
    }

    #[test]
    fn oracle_rejects_unknown_hypothesis() {
        let oracle = OracleMock::new(Vec::new());
        let bee = fixture("bee").unwrap();
        let x = render_prompt(PromptKind::Retrieve, &bee, &[], &PromptExtras { hint: Some(String::new()), ..Default::default() })
            .unwrap();
        assert!(matches!(oracle.complete(&x), Err(LlmError::BadResponse(_))));
    }

    #[test]
    fn noisy_oracle_is_seed_deterministic() {
        let mars = fixture("mars").unwrap();
        let retained: Vec<NodeId> = mars.sentence_ids().collect();
        let x = render_prompt(
            PromptKind::Propose,
            &mars,
            &[],
            &PromptExtras { retained: Some(retained), ..Default::default() },
        )
        .unwrap()
        .with_params(ChatParams { n_samples: 6, ..ChatParams::default() });
        let run = |seed| {
            OracleMock::new(fixtures())
                .with_noise(NoiseConfig { seed, ..NoiseConfig::default() })
                .complete(&x)
                .unwrap()
                .texts
        };
        assert_eq!(run(7), run(7));
        let texts: Vec<String> = (0..20).flat_map(run).collect();
        assert!(texts.iter().any(|t| t.contains("unsupported claim")));
        assert!(texts.iter().any(|t| !t.contains("unsupported claim")));
    }
}
