use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use chartlens::lines::{ExtractorKind, LineExtractor, RemoteLineExtractor};
use chartlens::refine::{IdentityRefiner, RefinementBackend};
use chartlens::sidecar::{RemoteRefiner, SidecarClient};
use chartlens::som::{Backends, ChatModel, FewShot, HttpChatModel, MllmConfig, MllmError, ScriptedModel, SegmentConfig};
use serde::Serialize;

use crate::args::GlobalArgs;
use crate::CliError;

pub const API_KEY_ENV: &str = "CHARTLENS_API_KEY";

/// Settings after merging defaults, the config file, env and flags.
#[derive(Debug, Clone, Serialize)]
pub struct Effective {
    pub mllm_url: Option<String>,
    pub model: String,
    /// Whether CHARTLENS_API_KEY is set; the key itself is never printed.
    pub api_key_set: bool,
    pub mock_mllm: Option<PathBuf>,
    pub refiner_url: Option<String>,
    pub line_extractor_url: Option<String>,
    pub few_shot: Option<PathBuf>,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub rate_limit: Option<f64>,
    pub segment: SegmentConfig,
    #[serde(skip)]
    api_key: Option<String>,
}

impl Effective {
    pub fn resolve(g: &GlobalArgs) -> Result<Self, CliError> {
        let mut segment = match &g.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::input(format!("invalid config {}: {e}", path.display())))?
            }
            None => SegmentConfig::default(),
        };
        if let Some(e) = g.extractor {
            segment.lines.extractor = e.into();
        }
        if let Some(k) = g.segments_per_line {
            segment.lines.segments_per_line = k;
        }
        segment.validate().map_err(CliError::input)?;
        if g.max_in_flight == 0 {
            return Err(CliError::input("--max-in-flight must be positive"));
        }
        if g.rate_limit.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
            return Err(CliError::input("--rate-limit must be a positive number"));
        }
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Ok(Self {
            mllm_url: g.mllm_url.clone().filter(|u| !u.is_empty()),
            model: g.model.clone(),
            api_key_set: api_key.is_some(),
            mock_mllm: g.mock_mllm.clone(),
            refiner_url: g.refiner_url.clone().filter(|u| !u.is_empty()),
            line_extractor_url: g.line_extractor_url.clone().filter(|u| !u.is_empty()),
            few_shot: g.few_shot.clone(),
            timeout_secs: g.timeout_secs,
            max_in_flight: g.max_in_flight,
            rate_limit: g.rate_limit,
            segment,
            api_key,
        })
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn backends(&self) -> Result<Backends, CliError> {
        let refiner: Arc<dyn RefinementBackend> = match &self.refiner_url {
            Some(url) => Arc::new(RemoteRefiner::new(SidecarClient::new(url.clone(), self.timeout(), self.max_in_flight))),
            None => Arc::new(IdentityRefiner),
        };
        let line_extractor: Arc<dyn LineExtractor> = match self.segment.lines.extractor {
            ExtractorKind::ColorTrace => Arc::new(self.segment.color_trace),
            ExtractorKind::RemoteNeural => {
                let url = self
                    .line_extractor_url
                    .as_ref()
                    .ok_or_else(|| CliError::input("the remote_neural extractor needs --line-extractor-url or CHARTLENS_LINE_EXTRACTOR_URL"))?;
                Arc::new(RemoteLineExtractor::new(SidecarClient::new(url.clone(), self.timeout(), self.max_in_flight)))
            }
        };
        Ok(Backends { refiner, line_extractor })
    }

    /// The mock fixture wins over an endpoint; neither is an external-service
    /// error.
    pub fn chat_model(&self) -> Result<Arc<dyn ChatModel>, CliError> {
        if let Some(path) = &self.mock_mllm {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read mock fixture {}: {e}", path.display())))?;
            return Ok(Arc::new(ScriptedModel::from_json(&text).map_err(CliError::input)?));
        }
        let Some(url) = &self.mllm_url else {
            return Err(CliError::service(MllmError::NotConfigured));
        };
        let mut cfg = MllmConfig::new(url.clone(), self.model.clone());
        cfg.api_key = self.api_key.clone();
        cfg.timeout = self.timeout();
        cfg.max_in_flight = self.max_in_flight;
        cfg.rate_per_sec = self.rate_limit;
        Ok(Arc::new(HttpChatModel::new(cfg)))
    }

    pub fn few_shot(&self) -> Result<FewShot, CliError> {
        match &self.few_shot {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read few-shot file {}: {e}", path.display())))?;
                FewShot::from_json(&text).map_err(|e| CliError::input(format!("invalid few-shot file {}: {e}", path.display())))
            }
            None => Ok(FewShot::builtin()),
        }
    }
}
