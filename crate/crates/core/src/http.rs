//! Blocking JSON-over-HTTP helper shared by the sidecar and MLLM clients.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum HttpError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("bad response body: {0}")]
    Decode(String),
}

impl HttpError {
    fn retryable(&self) -> bool {
        match self {
            HttpError::Transport(_) => true,
            HttpError::Status { status, .. } => *status == 429 || *status >= 500,
            HttpError::Decode(_) => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpClient {
    agent: ureq::Agent,
    retries: u32,
}

impl HttpClient {
    pub fn new(timeout: Duration, retries: u32) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        Self { agent, retries }
    }

    /// POSTs `body` as JSON and decodes a 200 response. Transport errors,
    /// 429 and 5xx are retried `retries` times; other statuses fail at once.
    pub fn post_json<B: Serialize, T: DeserializeOwned>(&self, url: &str, body: &B, bearer: Option<&str>) -> Result<T, HttpError> {
        let mut attempt = 0;
        loop {
            match self.post_once(url, body, bearer) {
                Err(e) if e.retryable() && attempt < self.retries => {
                    log::warn!("POST {url} failed ({e}); retrying");
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn post_once<B: Serialize, T: DeserializeOwned>(&self, url: &str, body: &B, bearer: Option<&str>) -> Result<T, HttpError> {
        let mut req = self.agent.post(url);
        if let Some(key) = bearer {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| HttpError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(HttpError::Status { status, body: truncate(&body, 500) });
        }
        let text = resp.body_mut().with_config().limit(256 << 20).read_to_string().map_err(|e| HttpError::Transport(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| HttpError::Decode(e.to_string()))
    }

    pub fn get_json<T: DeserializeOwned>(&self, url: &str) -> Result<T, HttpError> {
        let mut resp = self.agent.get(url).call().map_err(|e| HttpError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| HttpError::Transport(e.to_string()))?;
        if status != 200 {
            return Err(HttpError::Status { status, body: truncate(&text, 500) });
        }
        serde_json::from_str(&text).map_err(|e| HttpError::Decode(e.to_string()))
    }
}

fn truncate(s: &str, n: usize) -> String {
    match s.char_indices().nth(n) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

/// Joins a base URL and an endpoint path with exactly one slash.
pub fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}
