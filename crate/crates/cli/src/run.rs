//! The `run` command: a resumable batch of searches over one split.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use anyhow::{Context, Result};
use serde::Serialize;
use strucprove::datasets::load_instances;
use strucprove::demo::{build_demo_db, DemoDb};
use strucprove::llm::{CachedClient, CallCache, HttpChatClient, LlmClient, NoiseConfig, OracleMock, RateLimiter, RetryPolicy};
use strucprove::search::{run_search_with, write_trace, CallBudget, SearchError, SearchOutcome};
use strucprove::proof::serialize_chain;
use strucprove::Instance;
use tracing::{info, warn};

use crate::config::{ClientKind, RunConfig};
use crate::results::{read_results, ResultRecord, ResultsWriter, Status};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    /// Instances searched in this invocation.
    pub attempted: usize,
    /// Instances already present in the results file.
    pub skipped: usize,
    pub proved: usize,
    /// Instances stopped by a budget or a model failure.
    pub exhausted: usize,
    pub llm_calls: usize,
}

/// Builds the configured model client, wrapped in the call cache when one is
/// configured. `golds` feeds the oracle clients.
pub fn build_client(cfg: &RunConfig, golds: &[Instance]) -> Result<Box<dyn LlmClient>> {
    let inner: Box<dyn LlmClient> = match cfg.model.client {
        ClientKind::Http => {
            let key = std::env::var(&cfg.model.api_key_env).ok();
            if key.is_none() {
                warn!(var = %cfg.model.api_key_env, "no API key in the environment");
            }
            let mut client = HttpChatClient::new(&cfg.model.endpoint, key)?
                .with_retry(RetryPolicy { max_retries: cfg.model.max_retries, ..RetryPolicy::default() })
                .with_multi_sample(cfg.model.multi_sample);
            if let Some(rps) = cfg.model.requests_per_second {
                client = client.with_rate_limit(RateLimiter::new(rps, cfg.model.burst));
            }
            Box::new(client)
        }
        ClientKind::Oracle => Box::new(OracleMock::new(golds.iter().cloned())),
        ClientKind::NoisyOracle => Box::new(OracleMock::new(golds.iter().cloned()).with_noise(NoiseConfig {
            gold_probability: cfg.model.gold_probability,
            score_noise: cfg.model.score_noise,
            seed: cfg.seed,
        })),
    };
    match &cfg.cache_path {
        Some(path) => {
            let cache = CallCache::open(path).with_context(|| format!("opening cache {}", path.display()))?;
            Ok(Box::new(CachedClient::new(inner, Arc::new(cache))))
        }
        None => Ok(inner),
    }
}

/// Loads the split and the demonstration database, then runs the batch.
pub fn cmd_run(cfg: &RunConfig, split: &str, out: &Path, trace_dir: Option<&Path>) -> Result<RunSummary> {
    let instances = load_instances(cfg.split_path(split)?)?;
    let demo_instances = match &cfg.demo_split {
        Some(s) if s != split => load_instances(cfg.split_path(s)?)?,
        _ => instances.clone(),
    };
    let golds: Vec<Instance> = instances.iter().chain(&demo_instances).cloned().collect();
    let client = build_client(cfg, &golds)?;
    let db = build_demo_db(demo_instances);
    run_batch(cfg, &instances, &db, client.as_ref(), out, trace_dir)
}

fn trace_file(dir: &Path, id: &str) -> PathBuf {
    let safe: String = id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    dir.join(format!("{safe}.trace.jsonl"))
}

fn record_for(inst: &Instance, result: Result<SearchOutcome, SearchError>, trace: Option<PathBuf>) -> ResultRecord {
    let (status, outcome, error) = match result {
        Ok(o) => (if o.proof.is_some() { Status::Proved } else { Status::Unproved }, o, None),
        Err(e) => {
            let status = match &e {
                SearchError::BudgetExceeded { .. } => Status::BudgetExceeded,
                _ => Status::LlmError,
            };
            let partial = e.partial().cloned().unwrap_or_default();
            (status, partial, Some(e.to_string()))
        }
    };
    ResultRecord {
        id: inst.id.clone(),
        status,
        proof: outcome.proof.as_ref().map(serialize_chain),
        llm_calls: outcome.llm_calls,
        explored_states: outcome.explored_states,
        iterations: outcome.iterations,
        trace,
        error,
    }
}

fn search_one(
    cfg: &RunConfig,
    inst: &Instance,
    db: &DemoDb,
    client: &dyn LlmClient,
    budget: Option<&CallBudget>,
    trace_dir: Option<&Path>,
) -> Result<ResultRecord> {
    let result = run_search_with(inst, db, client, &cfg.search, budget);
    if let Err(SearchError::InvalidConfig(_) | SearchError::EmptyContext(_)) = &result {
        // data problems, not search outcomes
        return Err(result.unwrap_err().into());
    }
    let trace = match (trace_dir, &result) {
        (Some(dir), Ok(o)) => Some((trace_file(dir, &inst.id), &o.trace)),
        (Some(dir), Err(e)) => e.partial().map(|p| (trace_file(dir, &inst.id), &p.trace)),
        (None, _) => None,
    };
    let trace_path = match trace {
        Some((path, records)) => {
            let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_trace(std::io::BufWriter::new(file), records)?;
            Some(path)
        }
        None => None,
    };
    Ok(record_for(inst, result, trace_path))
}

/// Runs every instance not yet in `out`, appending records in input order
/// whatever the completion order, so an interrupted and resumed batch leaves
/// the same file as an uninterrupted one.
pub fn run_batch(
    cfg: &RunConfig,
    instances: &[Instance],
    db: &DemoDb,
    client: &dyn LlmClient,
    out: &Path,
    trace_dir: Option<&Path>,
) -> Result<RunSummary> {
    let done: HashSet<String> = read_results(out)?.into_iter().map(|r| r.id).collect();
    let pending: Vec<&Instance> = instances.iter().filter(|i| !done.contains(&i.id)).collect();
    let mut summary = RunSummary { skipped: instances.len() - pending.len(), ..RunSummary::default() };
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    info!(pending = pending.len(), skipped = summary.skipped, "starting batch");
    let budget = cfg.budget.max_total_calls.map(CallBudget::new);
    let mut writer = ResultsWriter::append(out)?;
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let workers = cfg.concurrency.min(pending.len()).max(1);

    std::thread::scope(|scope| -> Result<()> {
        let (tx, rx) = mpsc::channel::<(usize, Result<ResultRecord>)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (pending, next, stop, budget) = (&pending, &next, &stop, budget.as_ref());
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(inst) = pending.get(i) else { break };
                let record = search_one(cfg, inst, db, client, budget, trace_dir);
                if tx.send((i, record)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut buffered = BTreeMap::new();
        let mut written = 0;
        for (i, record) in rx {
            buffered.insert(i, record);
            while let Some(record) = buffered.remove(&written) {
                let record = match record {
                    Ok(r) => r,
                    Err(e) => {
                        stop.store(true, Ordering::SeqCst);
                        return Err(e);
                    }
                };
                summary.attempted += 1;
                summary.llm_calls += record.llm_calls;
                summary.proved += usize::from(record.status == Status::Proved);
                summary.exhausted += usize::from(record.is_exhaustion());
                if let Err(e) = writer.write(&record) {
                    stop.store(true, Ordering::SeqCst);
                    return Err(e);
                }
                info!(id = %record.id, status = ?record.status, calls = record.llm_calls, "instance finished");
                written += 1;
            }
        }
        Ok(())
    })?;
    Ok(summary)
}
