//! OpenAI-compatible chat-completions client.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;
use tracing::{debug, warn};

use super::{ChatExchange, LlmClient, LlmError, LlmReply, Usage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 4, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(30) }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self { max_retries: 0, ..Self::default() }
    }

    /// Delay before retry number `attempt` (0-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

/// Token bucket shared by every caller of one client.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64, burst: u32) -> Self {
        assert!(requests_per_second > 0.0, "rate must be positive");
        let capacity = f64::from(burst.max(1));
        Self { capacity, per_second: requests_per_second, state: Mutex::new((capacity, Instant::now())) }
    }

    /// Takes one token, returning how long the caller must wait first.
    fn reserve(&self) -> Duration {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let now = Instant::now();
        let (tokens, last) = *state;
        let tokens = (tokens + now.duration_since(last).as_secs_f64() * self.per_second).min(self.capacity) - 1.0;
        *state = (tokens, now);
        if tokens >= 0.0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(-tokens / self.per_second)
        }
    }

    pub fn acquire(&self) {
        let wait = self.reserve();
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// Parses a chat-completions response body.
pub fn parse_chat_response(body: &str) -> Result<LlmReply, LlmError> {
    let wire: WireResponse = serde_json::from_str(body).map_err(|e| LlmError::BadResponse(e.to_string()))?;
    if wire.choices.is_empty() {
        return Err(LlmError::BadResponse("no choices".into()));
    }
    let texts = wire.choices.into_iter().map(|c| c.message.content.unwrap_or_default()).collect();
    let usage = wire
        .usage
        .map(|u| Usage { prompt_tokens: u.prompt_tokens, completion_tokens: u.completion_tokens })
        .unwrap_or_default();
    Ok(LlmReply { texts, usage, cached: false })
}

pub struct HttpChatClient {
    endpoint: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
    retry: RetryPolicy,
    limiter: Option<RateLimiter>,
    multi_sample: bool,
}

impl HttpChatClient {
    /// `base_url` is the API root, e.g. `https://api.openai.com/v1`.
    pub fn new(base_url: &str, api_key: Option<String>) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(Self {
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key,
            http,
            retry: RetryPolicy::default(),
            limiter: None,
            multi_sample: true,
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_rate_limit(mut self, limiter: RateLimiter) -> Self {
        self.limiter = Some(limiter);
        self
    }

    /// When false, `n_samples > 1` is served by that many single-sample calls.
    pub fn with_multi_sample(mut self, enabled: bool) -> Self {
        self.multi_sample = enabled;
        self
    }

    fn post_once(&self, exchange: &ChatExchange, n: u32) -> Result<LlmReply, LlmError> {
        if let Some(l) = &self.limiter {
            l.acquire();
        }
        let p = &exchange.params;
        let body = json!({
            "model": p.model,
            "messages": exchange.messages,
            "temperature": p.temperature,
            "max_tokens": p.max_tokens,
            "n": n,
        });
        let mut req = self.http.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| LlmError::Transport(e.to_string()))?;
        if status.as_u16() == 429 {
            return Err(LlmError::RateLimited);
        }
        if status.is_server_error() {
            return Err(LlmError::Transport(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(LlmError::BadResponse(format!("HTTP {status}: {}", truncate(&text, 200))));
        }
        parse_chat_response(&text)
    }

    fn post_with_retry(&self, exchange: &ChatExchange, n: u32) -> Result<LlmReply, LlmError> {
        let mut attempt = 0;
        loop {
            match self.post_once(exchange, n) {
                Err(e) if e.is_transient() && attempt < self.retry.max_retries => {
                    let delay = self.retry.delay(attempt);
                    warn!(error = %e, attempt, ?delay, "retrying chat request");
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

impl LlmClient for HttpChatClient {
    fn complete(&self, exchange: &ChatExchange) -> Result<LlmReply, LlmError> {
        let want = exchange.params.n_samples.max(1) as usize;
        let mut reply = LlmReply { texts: Vec::with_capacity(want), usage: Usage::default(), cached: false };
        // Providers may ignore `n`; top up with further calls.
        while reply.texts.len() < want {
            let n = if self.multi_sample { (want - reply.texts.len()) as u32 } else { 1 };
            let part = self.post_with_retry(exchange, n)?;
            debug!(got = part.texts.len(), asked = n, "chat reply");
            reply.usage.prompt_tokens += part.usage.prompt_tokens;
            reply.usage.completion_tokens += part.usage.completion_tokens;
            reply.texts.extend(part.texts);
        }
        reply.texts.truncate(want);
        Ok(reply)
    }
}
