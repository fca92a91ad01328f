use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use super::prompt::PromptBundle;
use crate::http::{join_url, HttpClient};
use crate::limit::Limiter;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MllmError {
    #[error("mllm unavailable: {0}")]
    Unavailable(String),
    #[error("mllm not configured: set an endpoint URL or a mock fixture")]
    NotConfigured,
    #[error("mllm returned no text: {0}")]
    EmptyReply(String),
}

/// A chat model answering one prompt. `key` identifies the request (record
/// or chart id) so scripted models can replay per-record replies.
pub trait ChatModel: Send + Sync {
    fn complete(&self, prompt: &PromptBundle, key: &str) -> Result<String, MllmError>;
}

#[derive(Debug, Clone)]
pub struct MllmConfig {
    pub base_url: String,
    pub model: String,
    /// Read from the environment by callers; never from a flag.
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_in_flight: usize,
    /// Requests per second, if limited.
    pub rate_per_sec: Option<f64>,
}

impl MllmConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self { base_url: base_url.into(), model: model.into(), api_key: None, timeout: Duration::from_secs(120), max_in_flight: 4, rate_per_sec: None }
    }
}

/// OpenAI-compatible `/chat/completions` client at temperature 0 with the
/// chart attached as a base64 PNG data URL. Retries once.
#[derive(Debug, Clone)]
pub struct HttpChatModel {
    cfg: MllmConfig,
    url: String,
    http: HttpClient,
    limiter: Arc<Limiter>,
}

impl HttpChatModel {
    pub fn new(cfg: MllmConfig) -> Self {
        let url = if cfg.base_url.trim_end_matches('/').ends_with("/chat/completions") {
            cfg.base_url.clone()
        } else {
            join_url(&cfg.base_url, "chat/completions")
        };
        let http = HttpClient::new(cfg.timeout, 1);
        let limiter = Arc::new(Limiter::new(cfg.max_in_flight, cfg.rate_per_sec));
        Self { cfg, url, http, limiter }
    }

    pub fn request_body(&self, prompt: &PromptBundle) -> Result<Value, MllmError> {
        let png = prompt.marked_image.encode_png().map_err(|e| MllmError::Unavailable(e.to_string()))?;
        let data_url = format!("data:image/png;base64,{}", base64::engine::general_purpose::STANDARD.encode(png));
        Ok(json!({
            "model": self.cfg.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": [
                    {"type": "text", "text": prompt.user_text},
                    {"type": "image_url", "image_url": {"url": data_url}}
                ]}
            ]
        }))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Value,
}

/// Assistant text from a chat-completions reply; array content parts are
/// concatenated.
fn reply_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => {
            let texts: Vec<&str> = parts.iter().filter_map(|p| p.get("text").and_then(Value::as_str)).collect();
            (!texts.is_empty()).then(|| texts.join(""))
        }
        _ => None,
    }
}

impl ChatModel for HttpChatModel {
    fn complete(&self, prompt: &PromptBundle, _key: &str) -> Result<String, MllmError> {
        let body = self.request_body(prompt)?;
        let _permit = self.limiter.acquire();
        let resp: ChatResponse =
            self.http.post_json(&self.url, &body, self.cfg.api_key.as_deref()).map_err(|e| MllmError::Unavailable(e.to_string()))?;
        let choice = resp.choices.first().ok_or_else(|| MllmError::EmptyReply("no choices".into()))?;
        reply_text(&choice.message.content).ok_or_else(|| MllmError::EmptyReply(choice.message.content.to_string()))
    }
}

/// Replays canned replies from a JSON object keyed by record or chart id,
/// with `"*"` as the fallback.
#[derive(Debug, Clone, Default)]
pub struct ScriptedModel {
    replies: BTreeMap<String, String>,
}

impl ScriptedModel {
    pub fn new(replies: BTreeMap<String, String>) -> Self {
        Self { replies }
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map(Self::new).map_err(|e| format!("mock fixture must map ids to reply strings: {e}"))
    }

    pub fn always(reply: impl Into<String>) -> Self {
        Self::new(BTreeMap::from([("*".to_string(), reply.into())]))
    }
}

impl ChatModel for ScriptedModel {
    fn complete(&self, _prompt: &PromptBundle, key: &str) -> Result<String, MllmError> {
        self.replies
            .get(key)
            .or_else(|| self.replies.get("*"))
            .cloned()
            .ok_or_else(|| MllmError::Unavailable(format!("no scripted reply for {key:?}")))
    }
}
