//! Line traces and their equally spaced segment marks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{ChartImage, ChartKind, Dims, Mark, MarkSet, Point, Rect, Region};

/// One series as pixel points with strictly increasing x.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineTrace {
    pub points: Vec<Point>,
    pub series_id: u32,
}

impl LineTrace {
    /// Sorts by x and keeps the first point per column.
    pub fn new(mut points: Vec<Point>, series_id: u32) -> Self {
        points.sort_by_key(|p| p.x);
        points.dedup_by_key(|p| p.x);
        Self { points, series_id }
    }

    pub fn is_valid(&self, dims: Dims) -> bool {
        self.points.len() >= 2 && self.points.windows(2).all(|w| w[0].x < w[1].x) && self.points.iter().all(|p| p.x < dims.width && p.y < dims.height)
    }

    pub fn mean_y(&self) -> f64 {
        self.points.iter().map(|p| p.y as f64).sum::<f64>() / self.points.len().max(1) as f64
    }

    /// Linear interpolation of y at continuous column `x`, clamped to the ends.
    pub fn y_at(&self, x: f64) -> f64 {
        let pts = &self.points;
        if x <= pts[0].x as f64 {
            return pts[0].y as f64;
        }
        let last = pts[pts.len() - 1];
        if x >= last.x as f64 {
            return last.y as f64;
        }
        let i = pts.partition_point(|p| (p.x as f64) <= x);
        let (a, b) = (pts[i - 1], pts[i]);
        let t = (x - a.x as f64) / (b.x as f64 - a.x as f64);
        a.y as f64 + t * (b.y as f64 - a.y as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorKind {
    ColorTrace,
    RemoteNeural,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineMarkConfig {
    pub segments_per_line: usize,
    pub extractor: ExtractorKind,
    /// Dilation applied to segment boxes, in pixels.
    pub dilate_px: u32,
}

impl Default for LineMarkConfig {
    fn default() -> Self {
        Self { segments_per_line: 10, extractor: ExtractorKind::ColorTrace, dilate_px: 3 }
    }
}

impl LineMarkConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.segments_per_line < 2 {
            return Err("segments_per_line must be at least 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LineError {
    #[error("extractor unavailable: {0}")]
    ExtractorUnavailable(String),
}

pub trait LineExtractor: Send + Sync {
    fn extract(&self, img: &ChartImage) -> Result<Vec<LineTrace>, LineError>;
}

/// Classical fallback: clusters saturated pixels by hue and takes the
/// per-column median y of each cluster. Fails on same-colored series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColorTrace {
    pub min_saturation: f64,
    pub min_value: f64,
    pub hue_bin_deg: f64,
    pub min_pixels: usize,
}

impl Default for ColorTrace {
    fn default() -> Self {
        Self { min_saturation: 0.4, min_value: 0.25, hue_bin_deg: 5.0, min_pixels: 200 }
    }
}

/// Hue in degrees, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { d / max };
    (h, s, max)
}

impl ColorTrace {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.min_saturation) || !(0.0..=1.0).contains(&self.min_value) {
            return Err("color_trace saturation and value floors must lie in [0, 1]".into());
        }
        if !(self.hue_bin_deg > 0.0 && self.hue_bin_deg <= 180.0) {
            return Err(format!("color_trace.hue_bin_deg must be in (0, 180], got {}", self.hue_bin_deg));
        }
        if self.min_pixels == 0 {
            return Err("color_trace.min_pixels must be positive".into());
        }
        Ok(())
    }

    fn bins(&self) -> usize {
        (360.0 / self.hue_bin_deg).round().max(1.0) as usize
    }

    fn bin_of(&self, rgb: [u8; 3]) -> Option<usize> {
        let (h, s, v) = rgb_to_hsv(rgb);
        (s >= self.min_saturation && v >= self.min_value).then(|| ((h / self.hue_bin_deg) as usize) % self.bins())
    }
}

impl LineExtractor for ColorTrace {
    fn extract(&self, img: &ChartImage) -> Result<Vec<LineTrace>, LineError> {
        let nb = self.bins();
        let (w, h) = (img.width(), img.height());
        let mut bin_of_px = vec![u16::MAX; (w * h) as usize];
        let mut hist = vec![0usize; nb];
        for y in 0..h {
            for x in 0..w {
                if let Some(b) = self.bin_of(img.rgb(x, y)) {
                    bin_of_px[(y * w + x) as usize] = b as u16;
                    hist[b] += 1;
                }
            }
        }
        // clusters are circular runs of non-empty hue bins
        let mut cluster_of_bin = vec![usize::MAX; nb];
        let Some(start) = (0..nb).find(|&b| hist[b] == 0) else {
            return Ok(Vec::new());
        };
        let mut sizes: Vec<usize> = Vec::new();
        for k in 1..=nb {
            let b = (start + k) % nb;
            if hist[b] == 0 {
                continue;
            }
            let prev = (b + nb - 1) % nb;
            if hist[prev] == 0 {
                sizes.push(0);
            }
            cluster_of_bin[b] = sizes.len() - 1;
            *sizes.last_mut().unwrap() += hist[b];
        }
        let mut columns: Vec<BTreeMap<u32, Vec<u32>>> = vec![BTreeMap::new(); sizes.len()];
        for y in 0..h {
            for x in 0..w {
                let b = bin_of_px[(y * w + x) as usize];
                if b != u16::MAX {
                    let c = cluster_of_bin[b as usize];
                    if sizes[c] >= self.min_pixels {
                        columns[c].entry(x).or_default().push(y);
                    }
                }
            }
        }
        let mut traces: Vec<LineTrace> = columns
            .into_iter()
            .filter(|c| c.len() >= 2)
            .map(|cols| {
                let pts = cols
                    .into_iter()
                    .map(|(x, ys)| {
                        // ys arrive in ascending order
                        Point::new(x, ys[(ys.len() - 1) / 2])
                    })
                    .collect();
                LineTrace::new(pts, 0)
            })
            .collect();
        sort_and_number(&mut traces);
        Ok(traces)
    }
}

/// Orders traces top to bottom by mean y and numbers them from 1.
pub fn sort_and_number(traces: &mut [LineTrace]) {
    traces.sort_by(|a, b| a.mean_y().total_cmp(&b.mean_y()).then_with(|| a.points.cmp(&b.points)));
    for (i, t) in traces.iter_mut().enumerate() {
        t.series_id = i as u32 + 1;
    }
}

/// Equal x-intervals `[e_k, e_{k+1})` over the trace's domain.
pub fn segment_intervals(t: &LineTrace, k: usize) -> Vec<(f64, f64)> {
    let x0 = t.points[0].x as f64;
    let x1 = t.points[t.points.len() - 1].x as f64;
    (0..k).map(|i| (x0 + (x1 - x0) * i as f64 / k as f64, x0 + (x1 - x0) * (i + 1) as f64 / k as f64)).collect()
}

/// One box per interval: the extent of the trace over the interval
/// (points inside plus the interpolated ends), dilated by `dilate_px`.
/// Anchors sit on the trace at each interval's x-midpoint.
pub fn segment_line(t: &LineTrace, cfg: &LineMarkConfig, dims: Dims) -> Vec<(Region, Point)> {
    let k = cfg.segments_per_line;
    let d = cfg.dilate_px as f64;
    let intervals = segment_intervals(t, k);
    intervals
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let last = i + 1 == k;
            let inside = t.points.iter().filter(|p| {
                let x = p.x as f64;
                x >= a && (x < b || (last && x <= b))
            });
            let (ya, yb) = (t.y_at(a), t.y_at(b));
            let (ylo, yhi) = inside.fold((ya.min(yb), ya.max(yb)), |(lo, hi), p| (lo.min(p.y as f64), hi.max(p.y as f64)));
            let clamp_x = |v: f64| v.clamp(0.0, dims.width as f64) as u32;
            let clamp_y = |v: f64| v.clamp(0.0, dims.height as f64) as u32;
            let rect = Rect::new(
                clamp_x(a.floor() - d),
                clamp_y(ylo.floor() - d),
                clamp_x(b.ceil() + 1.0 + d),
                clamp_y(yhi.ceil() + 1.0 + d),
            );
            let mx = (a + b) / 2.0;
            let anchor = Point::from_f64(mx, t.y_at(mx), dims.width - 1, dims.height - 1);
            let region = Region::boxed(ChartKind::Line, rect).with_label(format!("L{}-{}", t.series_id, i + 1));
            (region, anchor)
        })
        .collect()
}

/// Extracts traces and turns each into `segments_per_line` labeled marks.
pub fn detect_lines(img: &ChartImage, cfg: &LineMarkConfig, extractor: &dyn LineExtractor) -> Result<MarkSet, LineError> {
    let traces: Vec<LineTrace> = extractor.extract(img)?.into_iter().filter(|t| t.is_valid(img.dims())).collect();
    Ok(marks_from_traces(img, &traces, cfg))
}

pub fn marks_from_traces(img: &ChartImage, traces: &[LineTrace], cfg: &LineMarkConfig) -> MarkSet {
    if traces.is_empty() {
        return MarkSet::empty(img.id(), img.dims()).with_warning("no lines found");
    }
    let marks = traces
        .iter()
        .flat_map(|t| segment_line(t, cfg, img.dims()))
        .map(|(region, anchor)| Mark { region, anchor, refined: false })
        .collect();
    MarkSet::new(img.id(), img.dims(), marks).expect("series ids are unique")
}

/// Splits a line mark label `L{series}-{k}` into its parts.
pub fn parse_line_label(label: &str) -> Option<(u32, u32)> {
    let rest = label.strip_prefix('L').or_else(|| label.strip_prefix('l'))?;
    let (s, k) = rest.split_once('-')?;
    Some((s.parse().ok()?, k.parse().ok()?))
}

/// Client for the sidecar's `/extract-lines` endpoint.
#[derive(Debug, Clone)]
pub struct RemoteLineExtractor {
    client: crate::sidecar::SidecarClient,
}

impl RemoteLineExtractor {
    pub fn new(client: crate::sidecar::SidecarClient) -> Self {
        Self { client }
    }
}

impl LineExtractor for RemoteLineExtractor {
    fn extract(&self, img: &ChartImage) -> Result<Vec<LineTrace>, LineError> {
        let image_png_b64 = crate::sidecar::png_b64(img).map_err(|e| LineError::ExtractorUnavailable(e.to_string()))?;
        let resp = self
            .client
            .extract_lines_raw(&crate::sidecar::ExtractLinesRequest { image_png_b64 })
            .map_err(|e| LineError::ExtractorUnavailable(e.to_string()))?;
        let (w, h) = (img.width(), img.height());
        let mut traces: Vec<LineTrace> = resp
            .lines
            .iter()
            .map(|pts| {
                let pts = pts.iter().filter(|p| p[0].is_finite() && p[1].is_finite()).map(|p| Point::from_f64(p[0], p[1], w - 1, h - 1)).collect();
                LineTrace::new(pts, 0)
            })
            .filter(|t| t.points.len() >= 2)
            .collect();
        sort_and_number(&mut traces);
        Ok(traces)
    }
}
