//! Run configuration: one TOML document plus environment overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use strucprove::datasets::DatasetSpec;
use strucprove::metrics::GedOptions;
use strucprove::search::SearchConfig;

use crate::UsageError;

/// Which model backend answers the prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClientKind {
    /// OpenAI-compatible chat-completions endpoint.
    Http,
    /// Answers from the gold proofs of the loaded dataset.
    Oracle,
    /// Oracle with seeded proposal and score noise.
    NoisyOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub client: ClientKind,
    pub endpoint: String,
    /// Name of the environment variable holding the API key. The key itself
    /// never appears in the config.
    pub api_key_env: String,
    pub requests_per_second: Option<f64>,
    pub burst: u32,
    pub max_retries: u32,
    /// Ask for `n` samples in one request instead of `n` requests.
    pub multi_sample: bool,
    /// Noisy oracle only: chance that a proposal is a gold step.
    pub gold_probability: f64,
    /// Noisy oracle only: score jitter.
    pub score_noise: u8,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            client: ClientKind::Http,
            endpoint: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            requests_per_second: None,
            burst: 1,
            max_retries: 4,
            multi_sample: true,
            gold_probability: 0.6,
            score_noise: 60,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetConfig {
    pub max_calls_per_instance: Option<usize>,
    pub max_total_calls: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    /// Split that supplies demonstrations; the run split itself when unset.
    pub demo_split: Option<String>,
    pub search: SearchConfig,
    pub model: ModelConfig,
    pub cache_path: Option<PathBuf>,
    pub budget: BudgetConfig,
    pub concurrency: usize,
    pub seed: u64,
    pub ged: GedOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec { name: "entailmentbank".into(), max_depth: 4, splits: BTreeMap::new() },
            demo_split: None,
            search: SearchConfig::default(),
            model: ModelConfig::default(),
            cache_path: None,
            budget: BudgetConfig::default(),
            concurrency: 1,
            seed: 0,
            ged: GedOptions { allow_approximate: true, ..GedOptions::default() },
        }
    }
}

/// Environment variables consulted after the file is read.
pub const ENV_OVERRIDES: [&str; 6] = [
    "STRUCPROVE_ENDPOINT",
    "STRUCPROVE_MODEL",
    "STRUCPROVE_CLIENT",
    "STRUCPROVE_CACHE",
    "STRUCPROVE_CONCURRENCY",
    "STRUCPROVE_SEED",
];

impl RunConfig {
    /// Reads `path` (defaults when `None`), applies environment overrides
    /// and validates. Relative split and cache paths are resolved against
    /// the config file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let mut cfg: RunConfig =
                    toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", p.display())))?;
                let base = p.parent().unwrap_or(Path::new("."));
                cfg.rebase(base);
                cfg
            }
            None => RunConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.finish()?;
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        for path in self.dataset.splits.values_mut() {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let Some(cache) = self.cache_path.as_mut().filter(|c| c.is_relative()) {
            *cache = base.join(&*cache);
        }
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = get("STRUCPROVE_ENDPOINT") {
            self.model.endpoint = v;
        }
        if let Some(v) = get("STRUCPROVE_MODEL") {
            self.search.model = v;
        }
        if let Some(v) = get("STRUCPROVE_CLIENT") {
            self.model.client = serde_json::from_value(serde_json::Value::String(v.clone()))
                .map_err(|_| UsageError(format!("STRUCPROVE_CLIENT: unknown client `{v}`")))?;
        }
        if let Some(v) = get("STRUCPROVE_CACHE") {
            self.cache_path = Some(v.into());
        }
        if let Some(v) = get("STRUCPROVE_CONCURRENCY") {
            self.concurrency = v.parse().map_err(|_| UsageError(format!("STRUCPROVE_CONCURRENCY: `{v}`")))?;
        }
        if let Some(v) = get("STRUCPROVE_SEED") {
            self.seed = v.parse().map_err(|_| UsageError(format!("STRUCPROVE_SEED: `{v}`")))?;
        }
        Ok(())
    }

    /// Derives dependent settings and checks the invariants.
    pub fn finish(&mut self) -> Result<()> {
        self.search.max_depth = self.dataset.max_depth as usize;
        if let Some(cap) = self.budget.max_calls_per_instance {
            self.search.max_calls = Some(cap);
        }
        if self.concurrency == 0 {
            bail!(UsageError("concurrency must be at least 1".into()));
        }
        if self.budget.max_calls_per_instance == Some(0) || self.budget.max_total_calls == Some(0) {
            bail!(UsageError("budgets must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.model.gold_probability) {
            bail!(UsageError("model.gold_probability must lie in [0, 1]".into()));
        }
        self.search.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(())
    }

    pub fn split_path(&self, split: &str) -> Result<&Path> {
        self.dataset
            .splits
            .get(split)
            .map(PathBuf::as_path)
            .ok_or_else(|| UsageError(format!("split `{split}` is not configured")).into())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_print() {
        let mut cfg = RunConfig::default();
        cfg.finish().unwrap();
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.search.beam_b, 3);
        assert_eq!(cfg.search.demos_k, 3);
        assert_eq!(cfg.search.retrieval_samples, 5);
    }

    #[test]
    fn env_overrides_win() {
        let mut cfg = RunConfig::default();
        let env: BTreeMap<&str, &str> =
            [("STRUCPROVE_CLIENT", "oracle"), ("STRUCPROVE_CONCURRENCY", "4"), ("STRUCPROVE_MODEL", "m")].into();
        cfg.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(cfg.model.client, ClientKind::Oracle);
        assert_eq!(cfg.concurrency, 4);
        assert_eq!(cfg.search.model, "m");
        let bad: BTreeMap<&str, &str> = [("STRUCPROVE_SEED", "x")].into();
        assert!(cfg.apply_env(|k| bad.get(k).map(|v| v.to_string())).is_err());
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let mut cfg: RunConfig = toml::from_str(
            "concurrency = 2\n[dataset]\nname = \"prontoqa\"\nmax_depth = 5\n[search]\npruning = \"off\"\n",
        )
        .unwrap();
        cfg.finish().unwrap();
        assert_eq!(cfg.search.max_iterations(), 25);
        assert_eq!(cfg.search.pruning, strucprove::search::Pruning::Off);
        let mut zero = RunConfig { concurrency: 0, ..RunConfig::default() };
        assert!(zero.finish().unwrap_err().downcast_ref::<UsageError>().is_some());
    }
}
