//! Deterministic synthetic charts with exact ground truth.
//!
//! Charts are painted with a built-in rasterizer (no anti-aliasing), so the
//! ground-truth regions are exactly the painted pixels. Style variation covers
//! theme, palette, grid lines, ticks and font size.

mod bar;
mod dataset;
mod line;
mod pie;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ChartImage, ChartKind, GeometryError, MarkSet, Point, Rect};
use crate::raster::Canvas;
use crate::vision::luminance;

pub use bar::gen_bar_chart;
pub use dataset::{generate_dataset, write_dataset, GenerateOptions};
pub use line::gen_line_chart;
pub use pie::gen_pie_chart;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("too many bars for canvas: bar width {0} px is below 4 px")]
    TooManyBars(u32),
    #[error("sector share {0:.2} degrees is below the 2 degree minimum")]
    SectorTooSmall(f64),
    #[error("invalid chart spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theme {
    Light,
    Dark,
}

impl Theme {
    pub fn background(self) -> [u8; 3] {
        match self {
            Theme::Light => [255, 255, 255],
            Theme::Dark => [28, 28, 34],
        }
    }

    pub fn ink(self) -> [u8; 3] {
        match self {
            Theme::Light => [50, 50, 50],
            Theme::Dark => [205, 205, 205],
        }
    }

    pub fn grid(self) -> [u8; 3] {
        match self {
            Theme::Light => [222, 222, 222],
            Theme::Dark => [62, 62, 70],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Style {
    pub grid: bool,
    pub ticks: bool,
    /// 1 or 2; glyph strokes stay thinner than the 3×3 cleaning element.
    pub font_scale: u32,
    /// Pie only: 1-px background-colored lines between sectors.
    #[serde(default)]
    pub borders: bool,
}

impl Default for Style {
    fn default() -> Self {
        Self { grid: false, ticks: true, font_scale: 1, borders: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarMode {
    Simple,
    Grouped,
    Stacked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XySeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ChartData {
    Bars { categories: Vec<String>, series: Vec<Series>, orientation: Orientation, mode: BarMode },
    Pie { categories: Vec<String>, values: Vec<f64> },
    Lines { series: Vec<XySeries> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub data: ChartData,
    pub theme: Theme,
    pub palette: Vec<[u8; 3]>,
    pub style: Style,
    pub seed: u64,
    pub canvas: (u32, u32),
    #[serde(default)]
    pub title: String,
    /// Pie only: angle of the first sector boundary, degrees clockwise from +x.
    #[serde(default)]
    pub start_angle_deg: f64,
}

impl ChartSpec {
    pub fn kind(&self) -> ChartKind {
        match self.data {
            ChartData::Bars { .. } => ChartKind::Bar,
            ChartData::Pie { .. } => ChartKind::Pie,
            ChartData::Lines { .. } => ChartKind::Line,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if self.canvas.0 < 64 || self.canvas.1 < 64 {
            return bad("canvas must be at least 64x64");
        }
        if !(1..=2).contains(&self.style.font_scale) {
            return bad("font_scale must be 1 or 2");
        }
        let series_count = match &self.data {
            ChartData::Bars { categories, series, mode, .. } => {
                if series.is_empty() || categories.is_empty() {
                    return bad("bar chart needs at least one series and category");
                }
                if series.iter().any(|s| s.values.len() != categories.len()) {
                    return bad("every series needs one value per category");
                }
                if series.iter().flat_map(|s| &s.values).any(|v| !v.is_finite() || *v < 0.0) {
                    return bad("bar values must be finite and non-negative");
                }
                if *mode == BarMode::Simple && series.len() != 1 {
                    return bad("simple bar charts have exactly one series");
                }
                series.len()
            }
            ChartData::Pie { categories, values } => {
                if values.len() < 2 {
                    return bad("pie needs at least 2 sectors");
                }
                if categories.len() != values.len() {
                    return bad("one category per pie value");
                }
                if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                    return bad("pie values must be finite and positive");
                }
                values.len()
            }
            ChartData::Lines { series } => {
                if series.is_empty() {
                    return bad("line chart needs at least one series");
                }
                if series.iter().any(|s| s.points.len() < 2) {
                    return bad("each line series needs at least 2 points");
                }
                if series.iter().flat_map(|s| &s.points).any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return bad("line values must be finite");
                }
                series.len()
            }
        };
        if self.palette.len() < series_count {
            return bad("palette has fewer colors than series/sectors");
        }
        for (i, a) in self.palette.iter().enumerate() {
            for b in &self.palette[i + 1..] {
                if channel_distance(*a, *b) < MIN_PALETTE_DISTANCE {
                    return bad("palette colors must differ by at least 48 in some channel");
                }
            }
        }
        Ok(())
    }
}

pub const MIN_PALETTE_DISTANCE: u8 = 48;

/// Largest per-channel absolute difference.
pub fn channel_distance(a: [u8; 3], b: [u8; 3]) -> u8 {
    (0..3).map(|i| a[i].abs_diff(b[i])).max().unwrap_or(0)
}

/// Per-element ground-truth metadata, parallel to the truth marks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementInfo {
    pub label: String,
    pub category: String,
    pub series: String,
    pub value: f64,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieTruth {
    pub center: (f64, f64),
    pub radius: f64,
    /// Sector boundary angles in radians, ascending in `[0, 2π)`.
    pub boundaries: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineTruth {
    pub series: String,
    pub color: [u8; 3],
    /// Vertex pixels, in x order.
    pub vertices: Vec<Point>,
    /// Continuous vertex positions of the painted polyline.
    pub polyline: Vec<(f64, f64)>,
}

impl LineTruth {
    /// Linear interpolation of the painted polyline at `x`.
    pub fn y_at(&self, x: f64) -> Option<f64> {
        let p = &self.polyline;
        if p.is_empty() || x < p[0].0 || x > p[p.len() - 1].0 {
            return None;
        }
        let i = p.partition_point(|q| q.0 < x).max(1).min(p.len() - 1);
        let (a, b) = (p[i - 1], p[i]);
        if b.0 == a.0 {
            return Some(a.1);
        }
        Some(a.1 + (x - a.0) * (b.1 - a.1) / (b.0 - a.0))
    }
}

/// A rendered chart with its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedChart {
    pub image: ChartImage,
    pub truth: MarkSet,
    pub elements: Vec<ElementInfo>,
    pub notes: Vec<String>,
    pub pie: Option<PieTruth>,
    pub lines: Vec<LineTruth>,
    pub theme: Theme,
}

/// Renders any spec.
pub fn generate(spec: &ChartSpec, id: &str) -> Result<GeneratedChart, SynthError> {
    match spec.kind() {
        ChartKind::Bar => gen_bar_chart(spec, id),
        ChartKind::Pie => gen_pie_chart(spec, id),
        ChartKind::Line => gen_line_chart(spec, id),
    }
}

const TAB10: [[u8; 3]; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];

const BRIGHT: [[u8; 3]; 6] = [[255, 215, 0], [0, 206, 209], [250, 128, 114], [173, 255, 47], [255, 105, 180], [135, 206, 250]];

const DEEP: [[u8; 3]; 4] = [[0, 0, 139], [128, 0, 0], [0, 100, 0], [75, 0, 130]];

const LINE_COLORS: [[u8; 3]; 6] = [[220, 40, 40], [30, 90, 220], [30, 170, 60], [245, 140, 20], [150, 60, 200], [0, 170, 200]];

/// Candidate fill colors with at least 60 gray levels of contrast against
/// the theme background.
pub fn fill_candidates(theme: Theme) -> Vec<[u8; 3]> {
    let bg = luminance(theme.background()) as i32;
    TAB10
        .iter()
        .chain(BRIGHT.iter())
        .chain(DEEP.iter())
        .copied()
        .filter(|c| (luminance(*c) as i32 - bg).abs() >= 60)
        .collect()
}

/// Picks `n` fill colors pairwise at least [`MIN_PALETTE_DISTANCE`] apart. When
/// `ring_gray_step` is set, cyclically adjacent colors also differ by that many
/// gray levels (pie sectors are separated on grayscale edges).
pub fn pick_palette(theme: Theme, n: usize, ring_gray_step: Option<u8>, rng: &mut ChaCha8Rng) -> Result<Vec<[u8; 3]>, SynthError> {
    let mut pool = fill_candidates(theme);
    pool.shuffle(rng);
    let mut chosen = Vec::with_capacity(n);
    if search_palette(&pool, n, ring_gray_step, &mut chosen, &mut 0) {
        Ok(chosen)
    } else {
        Err(SynthError::InvalidSpec(format!("cannot build a {n}-color palette for this theme")))
    }
}

fn search_palette(pool: &[[u8; 3]], n: usize, step: Option<u8>, chosen: &mut Vec<[u8; 3]>, budget: &mut u32) -> bool {
    *budget += 1;
    if *budget > 200_000 {
        return false;
    }
    if chosen.len() == n {
        return match (step, chosen.first(), chosen.last()) {
            (Some(s), Some(f), Some(l)) if n > 1 => luminance(*f).abs_diff(luminance(*l)) >= s,
            _ => true,
        };
    }
    for &c in pool {
        if chosen.iter().any(|&p| channel_distance(p, c) < MIN_PALETTE_DISTANCE) {
            continue;
        }
        if let (Some(s), Some(&last)) = (step, chosen.last()) {
            if luminance(last).abs_diff(luminance(c)) < s {
                continue;
            }
        }
        chosen.push(c);
        if search_palette(pool, n, step, chosen, budget) {
            return true;
        }
        chosen.pop();
    }
    false
}

const WORDS: [&str; 16] = [
    "North", "South", "East", "West", "Alpha", "Beta", "Gamma", "Delta", "Oak", "Pine", "Iron", "Gold", "Mars", "Luna", "Apex", "Nova",
];

/// Sampling constraints for [`ChartSpec::sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    pub theme: Option<Theme>,
    /// Pie: exact sector count.
    pub sectors: Option<usize>,
    /// Pie: smallest sector angle in degrees.
    pub min_sector_deg: f64,
    pub max_bars: usize,
    pub max_series: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self { theme: None, sectors: None, min_sector_deg: 20.0, max_bars: 12, max_series: 3 }
    }
}

impl ChartSpec {
    /// Samples one point of the style/data design space from `seed`.
    pub fn sample(kind: ChartKind, seed: u64, opts: SampleOptions) -> Result<ChartSpec, SynthError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theme = opts.theme.unwrap_or(if rng.random_bool(0.5) { Theme::Light } else { Theme::Dark });
        let style = Style {
            grid: rng.random_bool(0.5),
            ticks: rng.random_bool(0.7),
            font_scale: rng.random_range(1..=2),
            borders: rng.random_bool(0.4),
        };
        let title = format!("{} {}", WORDS[rng.random_range(0..WORDS.len())], match kind {
            ChartKind::Bar => "Sales",
            ChartKind::Pie => "Share",
            ChartKind::Line => "Trend",
        });
        let mut words: Vec<&str> = WORDS.to_vec();
        words.shuffle(&mut rng);
        let (data, palette, canvas, start_angle_deg) = match kind {
            ChartKind::Bar => {
                let canvas = *[(800, 500), (720, 480), (640, 480)].choose(&mut rng).unwrap();
                let max_series = opts.max_series.clamp(1, 3);
                let series_n = rng.random_range(1..=max_series);
                let mode = match series_n {
                    1 => BarMode::Simple,
                    _ if rng.random_bool(0.5) => BarMode::Grouped,
                    _ => BarMode::Stacked,
                };
                let per_cat = if mode == BarMode::Grouped { series_n } else { 1 };
                let stack = if mode == BarMode::Stacked { series_n } else { 1 };
                let max_cats = (opts.max_bars / (per_cat * stack)).clamp(1, 8);
                let cats_n = rng.random_range(max_cats.min(3)..=max_cats);
                let orientation = if rng.random_bool(0.5) { Orientation::Vertical } else { Orientation::Horizontal };
                let categories: Vec<String> = words[..cats_n].iter().map(|w| w.to_string()).collect();
                let series = (0..series_n)
                    .map(|s| Series {
                        name: format!("S{}", s + 1),
                        values: (0..cats_n).map(|_| (rng.random_range(25.0..100.0f64) * 10.0).round() / 10.0).collect(),
                    })
                    .collect();
                let palette = pick_palette(theme, series_n, None, &mut rng)?;
                (ChartData::Bars { categories, series, orientation, mode }, palette, canvas, 0.0)
            }
            ChartKind::Pie => {
                let n = opts.sectors.unwrap_or_else(|| rng.random_range(3..=8));
                if n < 2 {
                    return Err(SynthError::InvalidSpec("pie needs at least 2 sectors".into()));
                }
                let min = opts.min_sector_deg.max(2.0);
                if min * n as f64 > 360.0 {
                    return Err(SynthError::InvalidSpec(format!("{n} sectors cannot all span {min} degrees")));
                }
                let spare = 360.0 - min * n as f64;
                let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0f64)).collect();
                let wsum: f64 = weights.iter().sum();
                let values = weights.iter().map(|w| min + spare * w / wsum).collect();
                let categories = words.iter().cycle().take(n).map(|w| w.to_string()).collect();
                let palette = pick_palette(theme, n, Some(24), &mut rng)?;
                let canvas = *[(500, 500), (560, 480), (480, 480)].choose(&mut rng).unwrap();
                (ChartData::Pie { categories, values }, palette, canvas, rng.random_range(0.0..360.0))
            }
            ChartKind::Line => {
                let series_n = rng.random_range(1..=opts.max_series.clamp(1, 2));
                let points_n = rng.random_range(6..=12);
                let series = (0..series_n)
                    .map(|s| {
                        let mut y: f64 = rng.random_range(20.0..80.0);
                        let points = (0..points_n)
                            .map(|i| {
                                y = (y + rng.random_range(-15.0..15.0)).clamp(5.0, 95.0);
                                ((2000 + i) as f64, (y * 10.0).round() / 10.0)
                            })
                            .collect();
                        XySeries { name: words[s].to_string(), points }
                    })
                    .collect();
                let mut colors = LINE_COLORS.to_vec();
                colors.shuffle(&mut rng);
                colors.truncate(series_n);
                let canvas = *[(800, 500), (720, 480)].choose(&mut rng).unwrap();
                (ChartData::Lines { series }, colors, canvas, 0.0)
            }
        };
        Ok(ChartSpec { data, theme, palette, style, seed, canvas, title, start_angle_deg })
    }
}

/// Plot frame shared by the cartesian charts.
pub(crate) struct Frame {
    pub plot: Rect,
}

impl Frame {
    pub fn new(canvas: (u32, u32), font_scale: u32) -> Frame {
        let (w, h) = canvas;
        let left = 40 + 30 * font_scale;
        let bottom = 24 + 12 * font_scale;
        let top = 20 + 10 * font_scale;
        Frame { plot: Rect::new(left, top, w - 24, h - bottom) }
    }

    /// Axis lines, optional grid lines along the value axis and tick marks.
    pub fn draw(&self, c: &mut Canvas, spec: &ChartSpec, value_axis_vertical: bool, vmax: f64) {
        let p = self.plot;
        let ink = spec.theme.ink();
        let steps = 5;
        for i in 0..=steps {
            let frac = i as f64 / steps as f64;
            let label = format!("{}", (vmax * frac).round() as i64);
            if value_axis_vertical {
                let y = p.y1 as f64 - frac * p.height() as f64;
                let yi = y.round() as i64;
                if spec.style.grid && i > 0 {
                    for x in p.x0..p.x1 {
                        c.put(x as i64, yi, spec.theme.grid());
                    }
                }
                if spec.style.ticks {
                    for x in p.x0 as i64 - 5..p.x0 as i64 - 1 {
                        c.put(x, yi, ink);
                    }
                    let (tw, th) = crate::font::text_size(&label, spec.style.font_scale);
                    c.draw_text(p.x0 as i64 - 8 - tw as i64, yi - th as i64 / 2, &label, spec.style.font_scale, ink);
                }
            } else {
                let x = p.x0 as f64 + frac * p.width() as f64;
                let xi = x.round() as i64;
                if spec.style.grid && i > 0 {
                    for y in p.y0..p.y1 {
                        c.put(xi, y as i64, spec.theme.grid());
                    }
                }
                if spec.style.ticks {
                    for y in p.y1 as i64 + 1..p.y1 as i64 + 5 {
                        c.put(xi, y, ink);
                    }
                    let (tw, _) = crate::font::text_size(&label, spec.style.font_scale);
                    c.draw_text(xi - tw as i64 / 2, p.y1 as i64 + 7, &label, spec.style.font_scale, ink);
                }
            }
        }
        // axes sit just outside the plot rectangle
        for y in p.y0..=p.y1 {
            c.put(p.x0 as i64 - 1, y as i64, ink);
        }
        for x in p.x0 as i64 - 1..p.x1 as i64 {
            c.put(x, p.y1 as i64, ink);
        }
        if !spec.title.is_empty() {
            let (tw, _) = crate::font::text_size(&spec.title, spec.style.font_scale);
            c.draw_text((spec.canvas.0 as i64 - tw as i64) / 2, 6, &spec.title, spec.style.font_scale, ink);
        }
    }
}
