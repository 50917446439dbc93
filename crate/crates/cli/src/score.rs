//! The `score` command: per-instance metrics, the aggregate row and the
//! depth by shape breakdown.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use strucprove::datasets::classify;
use strucprove::metrics::{aggregate, GedOptions, MetricReport};
use strucprove::Instance;
use tracing::warn;

use crate::results::ResultRecord;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceScore {
    pub id: String,
    pub sequential: bool,
    pub depth: usize,
    #[serde(flatten)]
    pub report: MetricReport,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Cell {
    pub n: usize,
    /// Means over the cell; absent when it is empty.
    pub ev_f: Option<f64>,
    pub pr_f: Option<f64>,
}

impl Cell {
    fn of(scores: &[&InstanceScore]) -> Self {
        if scores.is_empty() {
            return Self::default();
        }
        let n = scores.len();
        let mean = |f: fn(&MetricReport) -> f64| Some(scores.iter().map(|s| f(&s.report)).sum::<f64>() / n as f64);
        Self { n, ev_f: mean(|r| r.ev_f), pr_f: mean(|r| r.pr_f) }
    }
}

/// One depth row; `depth` is `None` for the row over every depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub depth: Option<usize>,
    pub sequential: Cell,
    pub non_sequential: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub rows: Vec<InstanceScore>,
    pub aggregate: Option<MetricReport>,
    pub breakdown: Vec<BreakdownRow>,
    /// Result ids with no gold proof to score against.
    pub missing_gold: Vec<String>,
}

/// Scores each result against the gold instance of the same id, in result
/// order. Results without gold are skipped with a warning.
pub fn score_results(results: &[ResultRecord], gold: &[Instance], ged: &GedOptions) -> Result<ScoreReport> {
    let by_id: HashMap<&str, &Instance> = gold.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut rows = Vec::new();
    let mut missing_gold = Vec::new();
    for record in results {
        let Some(inst) = by_id.get(record.id.as_str()).filter(|i| i.gold.is_some()) else {
            warn!(id = %record.id, "no gold proof; skipping");
            missing_gold.push(record.id.clone());
            continue;
        };
        let gold_graph = inst.gold.as_ref().expect("filtered above");
        let pred = record.proof_graph()?;
        let report = MetricReport::score(pred.as_ref(), gold_graph, ged).with_context(|| format!("scoring {}", record.id))?;
        let class = classify(inst)?;
        rows.push(InstanceScore { id: record.id.clone(), sequential: class.sequential, depth: class.depth, report });
    }
    let reports: Vec<MetricReport> = rows.iter().map(|r| r.report).collect();
    let aggregate = aggregate(&reports).ok();
    let breakdown = breakdown(&rows);
    Ok(ScoreReport { rows, aggregate, breakdown, missing_gold })
}

/// Rows by ascending depth, then the all-depths row.
pub fn breakdown(rows: &[InstanceScore]) -> Vec<BreakdownRow> {
    let mut by_depth: BTreeMap<usize, Vec<&InstanceScore>> = BTreeMap::new();
    for r in rows {
        by_depth.entry(r.depth).or_default().push(r);
    }
    let split = |group: &[&InstanceScore], depth| {
        let (seq, non): (Vec<&InstanceScore>, Vec<&InstanceScore>) = group.iter().partition(|r| r.sequential);
        BreakdownRow { depth, sequential: Cell::of(&seq), non_sequential: Cell::of(&non) }
    };
    let mut out: Vec<BreakdownRow> = by_depth.iter().map(|(d, group)| split(group, Some(*d))).collect();
    let all: Vec<&InstanceScore> = rows.iter().collect();
    out.push(split(&all, None));
    out
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), num)
}

pub fn scores_tsv(report: &ScoreReport) -> String {
    let mut out = String::from("id\tsequential\tdepth");
    for f in MetricReport::FIELDS {
        write!(out, "\t{f}").unwrap();
    }
    out.push_str("\tg_sim_approximate\n");
    let mut line = |id: &str, seq: String, depth: String, r: &MetricReport| {
        let vals: Vec<String> = r.values().iter().map(|v| num(*v)).collect();
        writeln!(out, "{id}\t{seq}\t{depth}\t{}\t{}", vals.join("\t"), r.g_sim_approximate).unwrap();
    };
    for row in &report.rows {
        line(&row.id, row.sequential.to_string(), row.depth.to_string(), &row.report);
    }
    if let Some(agg) = &report.aggregate {
        line("all", "-".into(), "-".into(), agg);
    }
    out
}

pub fn breakdown_tsv(rows: &[BreakdownRow]) -> String {
    let mut out = String::from("depth\tseq_n\tseq_ev_f\tseq_pr_f\tnonseq_n\tnonseq_ev_f\tnonseq_pr_f\n");
    for r in rows {
        let depth = r.depth.map_or_else(|| "all".into(), |d| d.to_string());
        let (s, n) = (r.sequential, r.non_sequential);
        writeln!(out, "{depth}\t{}\t{}\t{}\t{}\t{}\t{}", s.n, opt(s.ev_f), opt(s.pr_f), n.n, opt(n.ev_f), opt(n.pr_f))
            .unwrap();
    }
    out
}

/// Writes `scores.tsv`, `breakdown.tsv` and `scores.json` under `dir`.
pub fn write_reports(report: &ScoreReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let files = [
        ("scores.tsv", scores_tsv(report)),
        ("breakdown.tsv", breakdown_tsv(&report.breakdown)),
        ("scores.json", serde_json::to_string_pretty(report)? + "\n"),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
