//! Content-addressed call cache, persisted as an append-only JSONL log.
//!
//! The first line is a header `{"format": ..., "version": ...}`; every
//! further line is one [`CacheRecord`]. Torn records (from an
//! interrupted write) are ignored on load.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{ChatExchange, LlmClient, LlmError, LlmReply, Usage};

pub const CACHE_FORMAT: &str = "strucprove-llm-cache";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key_hash: String,
    pub request_digest: String,
    pub texts: Vec<String>,
    pub usage: Usage,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Default)]
pub struct CallCache {
    path: Option<PathBuf>,
    entries: Mutex<HashMap<String, CacheRecord>>,
    file: Mutex<Option<File>>,
    in_flight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl CallCache {
    /// A cache that lives only as long as the process.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens or creates the log at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let io = |e: std::io::Error| LlmError::Cache(format!("{}: {e}", path.display()));
        let mut entries = HashMap::new();
        let exists = path.exists() && std::fs::metadata(&path).map_err(io)?.len() > 0;
        if exists {
            let reader = BufReader::new(File::open(&path).map_err(io)?);
            let lines: Vec<String> = reader.lines().collect::<Result<_, _>>().map_err(io)?;
            let header: Header = serde_json::from_str(lines.first().map(String::as_str).unwrap_or(""))
                .map_err(|e| LlmError::Cache(format!("{}: bad header: {e}", path.display())))?;
            if header.format != CACHE_FORMAT || header.version != CACHE_VERSION {
                return Err(LlmError::Cache(format!(
                    "{}: unsupported cache {} v{}",
                    path.display(),
                    header.format,
                    header.version
                )));
            }
            let last = lines.len() - 1;
            for (i, line) in lines.iter().enumerate().skip(1) {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(line) {
                    Ok(r) => {
                        entries.entry(r.key_hash.clone()).or_insert(r);
                    }
                    // Torn records end early; anything else is corruption.
                    Err(e) if i == last || e.is_eof() => warn!(error = %e, line = i + 1, "ignoring torn cache record"),
                    Err(e) => return Err(LlmError::Cache(format!("{}:{}: {e}", path.display(), i + 1))),
                }
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        if !exists {
            let header = Header { format: CACHE_FORMAT.into(), version: CACHE_VERSION };
            writeln!(file, "{}", serde_json::to_string(&header).expect("header serializes")).map_err(io)?;
        } else {
            // Terminate a torn line so the next append starts cleanly.
            let bytes = std::fs::read(&path).map_err(io)?;
            if bytes.last() != Some(&b'\n') {
                writeln!(file).map_err(io)?;
            }
        }
        Ok(Self { path: Some(path), entries: Mutex::new(entries), file: Mutex::new(Some(file)), ..Self::default() })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        lock(&self.entries).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<CacheRecord> {
        lock(&self.entries).get(key).cloned()
    }

    pub fn insert(&self, record: CacheRecord) -> Result<(), LlmError> {
        let mut entries = lock(&self.entries);
        if entries.contains_key(&record.key_hash) {
            return Ok(());
        }
        if let Some(file) = lock(&self.file).as_mut() {
            let line = serde_json::to_string(&record).map_err(|e| LlmError::Cache(e.to_string()))?;
            writeln!(file, "{line}").and_then(|_| file.flush()).map_err(|e| LlmError::Cache(e.to_string()))?;
        }
        entries.insert(record.key_hash.clone(), record);
        Ok(())
    }

    fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        lock(&self.in_flight).entry(key.to_string()).or_default().clone()
    }
}

/// Wraps a client so identical exchanges are answered from the cache.
pub struct CachedClient<C> {
    inner: C,
    cache: Arc<CallCache>,
}

impl<C: LlmClient> CachedClient<C> {
    pub fn new(inner: C, cache: Arc<CallCache>) -> Self {
        Self { inner, cache }
    }

    pub fn cache(&self) -> &Arc<CallCache> {
        &self.cache
    }

    pub fn inner(&self) -> &C {
        &self.inner
    }
}

fn hit(record: CacheRecord) -> LlmReply {
    LlmReply { texts: record.texts, usage: record.usage, cached: true }
}

impl<C: LlmClient> LlmClient for CachedClient<C> {
    fn complete(&self, exchange: &ChatExchange) -> Result<LlmReply, LlmError> {
        let key = exchange.cache_key();
        if let Some(r) = self.cache.get(&key) {
            return Ok(hit(r));
        }
        // Concurrent callers with the same key wait for the first one.
        let key_lock = self.cache.key_lock(&key);
        let _guard = lock(&key_lock);
        if let Some(r) = self.cache.get(&key) {
            return Ok(hit(r));
        }
        let reply = self.inner.complete(exchange)?;
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        self.cache.insert(CacheRecord {
            key_hash: key,
            request_digest: exchange.request_digest(),
            texts: reply.texts.clone(),
            usage: reply.usage,
            timestamp,
        })?;
        Ok(reply)
    }
}
