use std::collections::{BTreeSet, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use tracing::{debug, trace, warn};

use super::prune::prune;
use super::trace::{PrunedStep, TraceEvent, TraceRecord};
use super::{BudgetScope, HintMode, SearchConfig, SearchError};
use crate::demo::{fallback_guess, guess_exchange, guess_from_reply, guess_graph, DemoDb, GuessedGraph};
use crate::instance::{Demonstration, Instance};
use crate::llm::{
    extract_marker, extract_retrieval, extract_score, extract_steps, render_prompt, ChatExchange, ChatParams,
    HintStyle, LlmClient, LlmError, LlmReply, PromptExtras, PromptKind, Usage,
};
use crate::proof::{serialize_chain, serialize_nested, NodeId, ProofError, ProofGraph, ProofStep};

/// One node of the search frontier.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub graph: ProofGraph,
    pub hint: String,
    pub last_step: Option<ProofStep>,
    pub score: u8,
    pub iter: usize,
    pub retained_sentences: BTreeSet<NodeId>,
    pub trace_id: String,
}

impl SearchState {
    fn root() -> Self {
        Self {
            graph: ProofGraph::empty(),
            hint: String::new(),
            last_step: None,
            score: 0,
            iter: 0,
            retained_sentences: BTreeSet::new(),
            trace_id: "r".into(),
        }
    }

    /// Nodes concluded by the step that created this state.
    fn prev_new_nodes(&self) -> BTreeSet<NodeId> {
        self.last_step.iter().map(ProofStep::conclusion).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Present iff a step concluding the hypothesis was reached.
    pub proof: Option<ProofGraph>,
    /// Child states pushed to the frontier, plus the state that reached the
    /// hypothesis.
    pub explored_states: usize,
    /// Frontier levels expanded.
    pub iterations: usize,
    pub llm_calls: usize,
    pub usage: Usage,
    pub trace: Vec<TraceRecord>,
}

/// Call allowance shared by concurrent searches.
#[derive(Debug)]
pub struct CallBudget {
    limit: usize,
    used: AtomicUsize,
}

impl CallBudget {
    pub fn new(limit: usize) -> Self {
        Self { limit, used: AtomicUsize::new(0) }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn used(&self) -> usize {
        self.used.load(Ordering::SeqCst)
    }

    fn try_take(&self) -> bool {
        self.used.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |u| (u < self.limit).then_some(u + 1)).is_ok()
    }
}

/// Appends `step` to `graph`, leaving `graph` untouched.
pub fn extend(graph: &ProofGraph, step: ProofStep) -> Result<ProofGraph, ProofError> {
    graph.extend(step)
}

pub fn reached_hypothesis(step: &ProofStep) -> bool {
    step.concludes_hypothesis()
}

pub fn run_search(
    inst: &Instance,
    db: &DemoDb,
    client: &dyn LlmClient,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    run_search_with(inst, db, client, cfg, None)
}

/// [`run_search`] drawing calls from a shared budget as well as the
/// per-instance cap.
pub fn run_search_with(
    inst: &Instance,
    db: &DemoDb,
    client: &dyn LlmClient,
    cfg: &SearchConfig,
    global: Option<&CallBudget>,
) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    if inst.context.is_empty() {
        return Err(SearchError::EmptyContext(inst.id.clone()));
    }
    let mut engine = Engine { inst, db, client, cfg, global, out: SearchOutcome::default(), guess: None };
    match engine.run() {
        Ok(()) => Ok(engine.out),
        Err(Stop::Budget(scope, limit)) => {
            Err(SearchError::BudgetExceeded { scope, limit, partial: Box::new(engine.out) })
        }
        Err(Stop::Llm(source)) => Err(SearchError::Llm { source, partial: Box::new(engine.out) }),
    }
}

enum Stop {
    Budget(BudgetScope, usize),
    Llm(LlmError),
}

impl From<LlmError> for Stop {
    fn from(e: LlmError) -> Self {
        Stop::Llm(e)
    }
}

struct Engine<'a> {
    inst: &'a Instance,
    db: &'a DemoDb,
    client: &'a dyn LlmClient,
    cfg: &'a SearchConfig,
    global: Option<&'a CallBudget>,
    out: SearchOutcome,
    guess: Option<GuessedGraph>,
}

impl<'a> Engine<'a> {
    fn record(&mut self, state: &SearchState, event: TraceEvent) {
        trace!(trace_id = %state.trace_id, iter = state.iter, ?event, "search event");
        self.out.trace.push(TraceRecord { trace_id: state.trace_id.clone(), iter: state.iter, event });
    }

    fn params(&self, kind: PromptKind, n: usize) -> ChatParams {
        ChatParams {
            model: self.cfg.model.clone(),
            temperature: self.cfg.temperatures.get(kind),
            max_tokens: self.cfg.max_tokens,
            n_samples: n.max(1) as u32,
        }
    }

    fn call(&mut self, exchange: &ChatExchange) -> Result<LlmReply, Stop> {
        if let Some(limit) = self.cfg.max_calls {
            if self.out.llm_calls >= limit {
                return Err(Stop::Budget(BudgetScope::Instance, limit));
            }
        }
        if let Some(g) = self.global {
            if !g.try_take() {
                return Err(Stop::Budget(BudgetScope::Global, g.limit()));
            }
        }
        self.out.llm_calls += 1;
        let reply = self.client.complete(exchange)?;
        self.out.usage.prompt_tokens += reply.usage.prompt_tokens;
        self.out.usage.completion_tokens += reply.usage.completion_tokens;
        Ok(reply)
    }

    fn ask(
        &mut self,
        kind: PromptKind,
        demos: &[&Demonstration],
        extras: &PromptExtras,
        n: usize,
    ) -> Result<LlmReply, Stop> {
        let exchange = render_prompt(kind, self.inst, demos, extras)?.with_params(self.params(kind, n));
        self.call(&exchange)
    }

    fn run(&mut self) -> Result<(), Stop> {
        let a = self.cfg.frontier();
        let mut level = vec![SearchState::root()];
        while !level.is_empty() {
            // Best first within a level; the sort is stable so creation
            // order breaks ties.
            level.sort_by(|x, y| y.score.cmp(&x.score));
            if level.len() > a {
                let dropped = level.split_off(a);
                let first = dropped[0].clone();
                self.record(&first, TraceEvent::Dropped { reason: "frontier".into(), count: dropped.len() });
            }
            self.out.iterations += 1;
            let mut next = Vec::new();
            for state in level {
                if let Some(proof) = self.expand(&state, &mut next)? {
                    let nested = serialize_nested(&proof);
                    let last = SearchState { iter: state.iter + 1, ..state };
                    self.record(
                        &last,
                        TraceEvent::Terminated { reached: true, proof: Some(serialize_chain(&proof)), nested },
                    );
                    self.out.proof = Some(proof);
                    return Ok(());
                }
            }
            level = next;
        }
        let root = SearchState::root();
        self.record(&root, TraceEvent::Terminated { reached: false, proof: None, nested: None });
        Ok(())
    }

    fn select_demos(&mut self, state: &SearchState) -> Result<Vec<&'a Demonstration>, Stop> {
        let db = self.db;
        if db.is_empty() {
            return Ok(Vec::new());
        }
        let guessed = match &self.guess {
            None if state.graph.is_empty() => {
                let seed: Vec<&Demonstration> =
                    db.search(self.inst, &ProofGraph::empty(), self.cfg.demos_k).into_iter().map(|s| s.demo).collect();
                let exchange = guess_exchange(self.inst, &seed)?.with_params(self.params(PromptKind::GuessProof, 1));
                let parsed = match self.call(&exchange) {
                    Ok(reply) => reply.texts.first().and_then(|t| guess_from_reply(self.inst, t)),
                    Err(Stop::Llm(e)) => {
                        warn!(error = %e, "guess call failed");
                        None
                    }
                    Err(stop) => return Err(stop),
                };
                let g = parsed.unwrap_or_else(|| fallback_guess(self.inst));
                self.guess = Some(g.clone());
                g
            }
            prior => guess_graph(prior.as_ref(), &state.graph, &NoCalls, self.inst, &[]),
        };
        let scored = db.search(self.inst, guessed.graph(), self.cfg.demos_k);
        self.record(
            state,
            TraceEvent::DemoSelected {
                guessed: serialize_chain(guessed.graph()),
                demos: scored.iter().map(|s| (s.demo.id().to_string(), s.similarity)).collect(),
            },
        );
        Ok(scored.into_iter().map(|s| s.demo).collect())
    }

    fn retrieve(&mut self, state: &SearchState, demos: &[&Demonstration]) -> Result<BTreeSet<NodeId>, Stop> {
        let extras = PromptExtras { hint: Some(state.hint.clone()), ..Default::default() };
        let reply = self.ask(PromptKind::Retrieve, demos, &extras, self.cfg.retrieval_samples)?;
        let mut union = BTreeSet::new();
        let mut failed = 0;
        for text in &reply.texts {
            match extract_retrieval(text, &self.inst.context) {
                Ok(ids) => union.extend(ids),
                Err(_) => failed += 1,
            }
        }
        if union.is_empty() {
            // Keep the branch alive on what it had, else the whole context.
            union = if state.retained_sentences.is_empty() {
                self.inst.sentence_ids().collect()
            } else {
                state.retained_sentences.clone()
            };
        }
        self.record(state, TraceEvent::Retrieved { sentences: union.iter().copied().collect(), failed_samples: failed });
        Ok(union)
    }

    /// Proposes, renumbers and validates candidate steps. Returns the
    /// candidates and whether any sample said the proof is finished.
    fn propose(
        &mut self,
        state: &SearchState,
        demos: &[&Demonstration],
        extras: &PromptExtras,
    ) -> Result<(Vec<ProofStep>, bool), Stop> {
        let reply = self.ask(PromptKind::Propose, demos, extras, self.cfg.proposals_per_node)?;
        let graph = &state.graph;
        let fresh = NodeId::int(graph.next_intermediate());
        let existing: HashSet<BTreeSet<NodeId>> = graph.steps().iter().map(ProofStep::premise_set).collect();
        let mut seen = HashSet::new();
        let mut steps = Vec::new();
        let mut rejected = Vec::new();
        let mut finish = false;
        for text in &reply.texts {
            let extraction = extract_steps(text);
            finish |= extraction.finish;
            for step in extraction.steps {
                let known = step.premises().iter().all(|p| match p {
                    NodeId::Sentence(_) => self.inst.sentence(*p).is_some(),
                    _ => graph.contains(*p) && graph.step_for(*p).is_some(),
                });
                let step = if step.conclusion().is_intermediate() { step.with_conclusion(fresh) } else { step };
                let key = (step.premise_set(), step.concludes_hypothesis());
                if !known || existing.contains(&key.0) {
                    rejected.push(step.to_string());
                } else if steps.len() < self.cfg.proposals_per_node && seen.insert(key) {
                    steps.push(step);
                }
            }
        }
        self.record(
            state,
            TraceEvent::Proposed { steps: steps.iter().map(ToString::to_string).collect(), finish, rejected },
        );
        Ok((steps, finish))
    }

    fn evaluate(
        &mut self,
        state: &SearchState,
        demos: &[&Demonstration],
        extras: &PromptExtras,
        step: &ProofStep,
    ) -> Result<u8, Stop> {
        let extras = PromptExtras { candidate: Some(step.clone()), ..extras.clone() };
        let reply = self.ask(PromptKind::Evaluate, demos, &extras, 1)?;
        let (score, defaulted) = match reply.texts.first().map(|t| extract_score(t)) {
            Some(Ok(s)) => (s.value, false),
            _ => (self.cfg.default_score, true),
        };
        self.record(state, TraceEvent::Evaluated { step: step.to_string(), score, defaulted });
        Ok(score)
    }

    fn hint(&mut self, child: &SearchState, demos: &[&Demonstration], step: &ProofStep) -> Result<String, Stop> {
        let style = match self.cfg.hint_mode {
            HintMode::Off => return Ok(String::new()),
            HintMode::Hint => HintStyle::Missing,
            HintMode::WhatsNext => HintStyle::WhatsNext,
        };
        let extras = PromptExtras {
            conclusion: Some((step.conclusion(), step.text().to_string())),
            hint_style: style,
            ..Default::default()
        };
        let reply = self.ask(PromptKind::Hint, demos, &extras, 1)?;
        let text = reply.texts.first().map(|t| extract_marker(t, style.marker()).to_string()).unwrap_or_default();
        self.record(child, TraceEvent::Hint { node: step.conclusion(), text: text.clone() });
        Ok(text)
    }

    /// Expands one state, pushing children onto `next`. Returns the proof
    /// when a child reaches the hypothesis.
    fn expand(&mut self, state: &SearchState, next: &mut Vec<SearchState>) -> Result<Option<ProofGraph>, Stop> {
        debug!(trace_id = %state.trace_id, iter = state.iter, steps = state.graph.len(), "expand");
        let demos = self.select_demos(state)?;
        let retained = self.retrieve(state, &demos)?;
        let extras = PromptExtras {
            retained: Some(retained.iter().copied().collect()),
            intermediates: state
                .graph
                .steps()
                .iter()
                .filter(|s| s.conclusion().is_intermediate())
                .map(|s| (s.conclusion(), s.text().to_string()))
                .collect(),
            ..Default::default()
        };
        let (candidates, finish) = self.propose(state, &demos, &extras)?;
        let iter = state.iter + 1;

        if candidates.is_empty() {
            let closing = match (&state.last_step, finish) {
                (Some(last), true) if last.conclusion().is_intermediate() => {
                    ProofStep::new(vec![last.conclusion()], NodeId::Hypothesis, self.inst.hypothesis.clone()).ok()
                }
                _ => None,
            };
            match closing {
                Some(step) if iter <= self.cfg.max_iterations() => {
                    let child_id = format!("{}.1", state.trace_id);
                    self.record(state, TraceEvent::Extended { step: step.to_string(), child: child_id });
                    self.out.explored_states += 1;
                    return Ok(Some(state.graph.extend(step).expect("closing step is valid")));
                }
                _ => {
                    self.record(state, TraceEvent::Dropped { reason: "no proposals".into(), count: 0 });
                    return Ok(None);
                }
            }
        }

        let mut scored = Vec::with_capacity(candidates.len());
        for step in candidates {
            let s = self.evaluate(state, &demos, &extras, &step)?;
            scored.push((step, s));
        }
        let pruned = prune(&scored, &state.graph, &state.prev_new_nodes(), self.cfg.beam_b, self.cfg.pruning);
        self.record(
            state,
            TraceEvent::Pruned {
                kept: pruned.kept.iter().map(|(s, k)| (s.to_string(), *k)).collect(),
                removed: pruned
                    .removed
                    .iter()
                    .map(|(s, k, r)| PrunedStep { step: s.to_string(), score: *k, rule: *r })
                    .collect(),
                guard_fired: pruned.guard_fired,
            },
        );

        if iter > self.cfg.max_iterations() {
            self.record(state, TraceEvent::Dropped { reason: "max iterations".into(), count: pruned.kept.len() });
            return Ok(None);
        }
        for (i, (step, score)) in pruned.kept.into_iter().enumerate() {
            let child_id = format!("{}.{}", state.trace_id, i + 1);
            let graph = match state.graph.extend(step.clone()) {
                Ok(g) => g,
                Err(e) => {
                    debug!(error = %e, "candidate no longer extends the graph");
                    continue;
                }
            };
            self.record(state, TraceEvent::Extended { step: step.to_string(), child: child_id.clone() });
            if reached_hypothesis(&step) {
                self.out.explored_states += 1;
                return Ok(Some(graph));
            }
            let mut child = SearchState {
                graph,
                hint: String::new(),
                last_step: Some(step.clone()),
                score,
                iter,
                retained_sentences: retained.clone(),
                trace_id: child_id,
            };
            child.hint = self.hint(&child, &demos, &step)?;
            self.out.explored_states += 1;
            next.push(child);
        }
        Ok(None)
    }
}

/// For merges, which never call the model.
struct NoCalls;

impl LlmClient for NoCalls {
    fn complete(&self, _: &ChatExchange) -> Result<LlmReply, LlmError> {
        Err(LlmError::BadResponse("merging a guess makes no model calls".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{fixture, fixtures};
    use crate::demo::build_demo_db;
    use crate::llm::{Matcher, OracleMock, ScriptedMock};
    use crate::search::Pruning;

    fn cfg(pruning: Pruning) -> SearchConfig {
        SearchConfig { pruning, ..SearchConfig::default() }
    }

    #[test]
    fn oracle_reconstructs_mars() {
        let mars = fixture("mars").unwrap();
        let db = build_demo_db(fixtures());
        let oracle = OracleMock::new(fixtures());
        let out = run_search(&mars, &db, &oracle, &cfg(Pruning::Div)).unwrap();
        assert_eq!(out.proof.as_ref(), mars.gold.as_ref());
        assert_eq!(out.llm_calls, oracle.call_count());
        assert!(out.explored_states <= 3 * out.iterations);
    }

    #[test]
    fn oracle_solves_every_fixture_in_every_mode() {
        let db = build_demo_db(fixtures());
        let oracle = OracleMock::new(fixtures());
        for mode in [Pruning::Div, Pruning::ReuseIc, Pruning::Off] {
            for inst in fixtures() {
                let out = run_search(&inst, &db, &oracle, &cfg(mode)).unwrap();
                let proof = out.proof.unwrap_or_else(|| panic!("{} under {mode:?}", inst.id));
                let gold = inst.gold.as_ref().unwrap();
                assert_eq!(proof.leaves(), gold.leaves(), "{}", inst.id);
                assert_eq!(proof.len(), gold.len(), "{} under {mode:?}", inst.id);
            }
        }
    }

    #[test]
    fn always_finish_gives_no_proof() {
        let mars = fixture("mars").unwrap();
        let db = build_demo_db(fixtures());
        let mock = ScriptedMock::strict().on(Matcher::Any, "Finish");
        let out = run_search(&mars, &db, &mock, &SearchConfig::default()).unwrap();
        assert!(out.proof.is_none());
        assert_eq!(out.explored_states, 0);
    }

    #[test]
    fn zero_iterations_drops_every_child() {
        let mars = fixture("mars").unwrap();
        let db = build_demo_db(fixtures());
        let oracle = OracleMock::new(fixtures());
        let c = SearchConfig { max_iter_multiplier: 0, ..SearchConfig::default() };
        let out = run_search(&mars, &db, &oracle, &c).unwrap();
        assert!(out.proof.is_none());
        assert_eq!(out.explored_states, 0);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn bare_finish_closes_on_last_intermediate() {
        let bee = fixture("bee").unwrap();
        let empty = build_demo_db(Vec::new());
        let mock = ScriptedMock::strict()
            .on(Matcher::Kind(PromptKind::Retrieve), "sent4, sent7, sent12")
            .on(Matcher::Kind(PromptKind::Evaluate), "Evaluate: 90")
            .on(Matcher::Kind(PromptKind::Hint), "Missing: nothing")
            .on(Matcher::Contains("int1: bees".into()), "Finish")
            .on(Matcher::Kind(PromptKind::Propose), "sent7 & sent4 -> int1: bees help plants");
        let out = run_search(&bee, &empty, &mock, &SearchConfig::default()).unwrap();
        let proof = out.proof.unwrap();
        assert_eq!(proof.len(), 2);
        assert_eq!(proof.steps()[1].premises(), [NodeId::int(1)]);
        assert!(proof.concludes_hypothesis());
    }

    #[test]
    fn proposals_are_renumbered_to_the_next_free_intermediate() {
        let bee = fixture("bee").unwrap();
        let empty = build_demo_db(Vec::new());
        let mock = ScriptedMock::strict()
            .on(Matcher::Kind(PromptKind::Retrieve), "sent4, sent7, sent12")
            .on(Matcher::Kind(PromptKind::Evaluate), "Evaluate: 90")
            .on(Matcher::Kind(PromptKind::Hint), "Missing: nothing")
            .on(Matcher::Contains("int1: first".into()), "int1 & sent12 -> hypothesis")
            .on(Matcher::Kind(PromptKind::Propose), "sent7 & sent4 -> int7: first");
        let out = run_search(&bee, &empty, &mock, &SearchConfig::default()).unwrap();
        assert_eq!(out.proof.unwrap().steps()[0].conclusion(), NodeId::int(1));
    }

    #[test]
    fn budgets_stop_the_search() {
        let mars = fixture("mars").unwrap();
        let db = build_demo_db(fixtures());
        let oracle = OracleMock::new(fixtures());
        let c = SearchConfig { max_calls: Some(1), ..SearchConfig::default() };
        match run_search(&mars, &db, &oracle, &c) {
            Err(SearchError::BudgetExceeded { scope: BudgetScope::Instance, limit: 1, partial }) => {
                assert_eq!(partial.llm_calls, 1);
                assert!(partial.proof.is_none());
            }
            other => panic!("{other:?}"),
        }
        let global = CallBudget::new(4);
        let err = run_search_with(&mars, &db, &oracle, &SearchConfig::default(), Some(&global)).unwrap_err();
        assert!(matches!(err, SearchError::BudgetExceeded { scope: BudgetScope::Global, .. }));
        assert_eq!(global.used(), 4);
    }

    #[test]
    fn deterministic_under_a_deterministic_client() {
        let moon = fixture("moon").unwrap();
        let db = build_demo_db(fixtures());
        let a = run_search(&moon, &db, &OracleMock::new(fixtures()), &SearchConfig::default()).unwrap();
        let b = run_search(&moon, &db, &OracleMock::new(fixtures()), &SearchConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
