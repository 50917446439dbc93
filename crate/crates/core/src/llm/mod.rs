//! Chat-model access: the exchange types, prompt templates, response
//! extractors, an OpenAI-compatible HTTP client, a persistent call cache and
//! deterministic mocks.

mod cache;
mod extract;
mod http;
mod mock;
mod prompt;

pub use cache::{CacheRecord, CachedClient, CallCache, CACHE_FORMAT, CACHE_VERSION};
pub use extract::{
    extract_hint, extract_marker, extract_retrieval, extract_score, extract_steps, ExtractError, Score,
    StepExtraction,
};
pub use http::{parse_chat_response, HttpChatClient, RateLimiter, RetryPolicy};
pub use mock::{Matcher, NoiseConfig, OracleMock, ScriptedMock};
pub use prompt::{question_block, render_prompt, HintStyle, PromptExtras, PromptKind, Template};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub n_samples: u32,
}

impl Default for ChatParams {
    fn default() -> Self {
        Self { model: "gpt-3.5-turbo-0613".into(), temperature: 0.0, max_tokens: 512, n_samples: 1 }
    }
}

/// A role-tagged message list plus sampling parameters: the whole request
/// side of the model contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub messages: Vec<ChatMessage>,
    pub params: ChatParams,
}

impl ChatExchange {
    pub fn new(messages: Vec<ChatMessage>) -> Self {
        assert!(!messages.is_empty(), "an exchange needs at least one message");
        Self { messages, params: ChatParams::default() }
    }

    pub fn with_params(mut self, params: ChatParams) -> Self {
        self.params = params;
        self
    }

    pub fn system_text(&self) -> Option<&str> {
        self.messages.iter().find(|m| m.role == Role::System).map(|m| m.content.as_str())
    }

    pub fn last_user_text(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }

    /// Plain-text rendering: `System: ...`, a blank line, then the remaining
    /// message bodies.
    pub fn transcript(&self) -> String {
        let mut out = String::new();
        for (i, m) in self.messages.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            match m.role {
                Role::System => {
                    out.push_str("System: ");
                    out.push_str(&m.content);
                }
                Role::User => out.push_str(&m.content),
                Role::Assistant => {
                    out.push_str("Assistant: ");
                    out.push_str(&m.content);
                }
            }
        }
        out
    }

    /// Content address over messages and params (model and temperature
    /// included).
    pub fn cache_key(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("exchange serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Digest over the messages only, for spotting the same prompt under
    /// different parameters.
    pub fn request_digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.messages).expect("messages serialize");
        hex::encode(&Sha256::digest(bytes)[..8])
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmReply {
    pub texts: Vec<String>,
    pub usage: Usage,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("rate limited by provider")]
    RateLimited,
    #[error("bad response: {0}")]
    BadResponse(String),
    #[error("prompt is missing `{0}`")]
    MissingExtra(&'static str),
    #[error("template error: {0}")]
    Template(String),
    #[error("cache error: {0}")]
    Cache(String),
}

impl LlmError {
    /// Whether a retry may succeed.
    pub fn is_transient(&self) -> bool {
        matches!(self, LlmError::Transport(_) | LlmError::RateLimited)
    }
}

/// Anything that can answer a chat exchange. Implementations must be safe to
/// share between threads.
pub trait LlmClient: Send + Sync {
    fn complete(&self, exchange: &ChatExchange) -> Result<LlmReply, LlmError>;
}

impl<T: LlmClient + ?Sized> LlmClient for &T {
    fn complete(&self, exchange: &ChatExchange) -> Result<LlmReply, LlmError> {
        (**self).complete(exchange)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for Box<T> {
    fn complete(&self, exchange: &ChatExchange) -> Result<LlmReply, LlmError> {
        (**self).complete(exchange)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for std::sync::Arc<T> {
    fn complete(&self, exchange: &ChatExchange) -> Result<LlmReply, LlmError> {
        (**self).complete(exchange)
    }
}

pub fn complete(client: &dyn LlmClient, exchange: &ChatExchange) -> Result<LlmReply, LlmError> {
    client.complete(exchange)
}

/// Rough token estimate for clients that do not report usage.
pub(crate) fn approx_tokens(text: &str) -> u64 {
    (text.len() as u64).div_ceil(4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_key_depends_on_params() {
        let x = ChatExchange::new(vec![ChatMessage::user("hi")]);
        let mut y = x.clone();
        y.params.temperature = 0.7;
        assert_ne!(x.cache_key(), y.cache_key());
        assert_eq!(x.request_digest(), y.request_digest());
        assert_eq!(x.cache_key(), x.clone().cache_key());
    }

    #[test]
    fn transcript_layout() {
        let x = ChatExchange::new(vec![ChatMessage::system("Sys."), ChatMessage::user("Body")]);
        assert_eq!(x.transcript(), "System: Sys.\n\nBody");
    }
}
