//! Clients for the optional neural sidecar (`/refine`, `/extract-lines`,
//! `/healthz`).

use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::geometry::{ChartImage, Geometry, Point, Region};
use crate::http::{join_url, HttpClient, HttpError};
use crate::limit::Limiter;
use crate::refine::{RefineError, RefineOutput, RefinementBackend};
use crate::rle::RleMask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineRequest {
    pub image_png_b64: String,
    pub points: Vec<[u32; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineResponse {
    pub mask_rle: String,
    pub width: u32,
    pub height: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractLinesRequest {
    pub image_png_b64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractLinesResponse {
    pub lines: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub models_loaded: bool,
}

pub fn png_b64(img: &ChartImage) -> Result<String, crate::GeometryError> {
    Ok(base64::engine::general_purpose::STANDARD.encode(img.encode_png()?))
}

/// Shared connection settings for one sidecar base URL.
#[derive(Debug, Clone)]
pub struct SidecarClient {
    base_url: String,
    http: HttpClient,
    limiter: Arc<Limiter>,
}

impl SidecarClient {
    /// One retry on transient failure; at most `max_in_flight` concurrent
    /// requests.
    pub fn new(base_url: impl Into<String>, timeout: Duration, max_in_flight: usize) -> Self {
        Self { base_url: base_url.into(), http: HttpClient::new(timeout, 1), limiter: Arc::new(Limiter::new(max_in_flight, None)) }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn health(&self) -> Result<Health, HttpError> {
        self.http.get_json(&join_url(&self.base_url, "healthz"))
    }

    pub fn refine_raw(&self, req: &RefineRequest) -> Result<RefineResponse, HttpError> {
        let _permit = self.limiter.acquire();
        self.http.post_json(&join_url(&self.base_url, "refine"), req, None)
    }

    pub fn extract_lines_raw(&self, req: &ExtractLinesRequest) -> Result<ExtractLinesResponse, HttpError> {
        let _permit = self.limiter.acquire();
        self.http.post_json(&join_url(&self.base_url, "extract-lines"), req, None)
    }
}

/// Refinement through the sidecar's point-prompted segmentation model.
#[derive(Debug, Clone)]
pub struct RemoteRefiner {
    client: SidecarClient,
}

impl RemoteRefiner {
    pub fn new(client: SidecarClient) -> Self {
        Self { client }
    }
}

impl RefinementBackend for RemoteRefiner {
    fn refine(&self, img: &ChartImage, _region: &Region, points: &[Point]) -> Result<RefineOutput, RefineError> {
        let req = RefineRequest {
            image_png_b64: png_b64(img).map_err(|e| RefineError::Unavailable(e.to_string()))?,
            points: points.iter().map(|p| [p.x, p.y]).collect(),
        };
        let resp = self.client.refine_raw(&req).map_err(|e| RefineError::Unavailable(e.to_string()))?;
        if (resp.width, resp.height) != (img.width(), img.height()) {
            return Err(RefineError::InvalidMask(format!(
                "mask is {}x{} but image is {}x{}",
                resp.width,
                resp.height,
                img.width(),
                img.height()
            )));
        }
        if !(0.0..=1.0).contains(&resp.score) {
            return Err(RefineError::InvalidMask(format!("score {} outside [0, 1]", resp.score)));
        }
        let mask = RleMask::parse(resp.width, resp.height, &resp.mask_rle).map_err(|e| RefineError::InvalidMask(e.to_string()))?;
        Ok(RefineOutput { geometry: Geometry::MaskRle(mask), score: resp.score })
    }
}
