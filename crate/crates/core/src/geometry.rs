//! Chart images, element regions and the exact raster predicates built on
//! them.
//!
//! Every region is rasterized with the same pixel-center rule before areas or
//! overlaps are computed, so boxes, polygons and run-length masks compare on
//! equal footing. A pixel `(x, y)` covers the unit square `[x, x+1) × [y, y+1)`
//! and belongs to a polygon when its center `(x + 0.5, y + 0.5)` lies inside
//! under the even-odd rule.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rle::RleMask;

/// Smallest accepted chart side, in pixels.
pub const MIN_CHART_SIDE: u32 = 16;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("chart must be at least {MIN_CHART_SIDE}x{MIN_CHART_SIDE} pixels, got {width}x{height}")]
    ChartTooSmall { width: u32, height: u32 },
    #[error("pixel buffer holds {actual} bytes, expected {expected}")]
    PixelCount { expected: usize, actual: usize },
    #[error("incompatible charts: {a} vs {b}")]
    DimensionMismatch { a: Dims, b: Dims },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("duplicate mark label {0:?}")]
    DuplicateLabel(String),
    #[error("mark {0} has no label")]
    MissingLabel(usize),
    #[error("image io: {0}")]
    Image(#[from] image::ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub width: u32,
    pub height: u32,
}

impl Dims {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn area(self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// Integer pixel coordinate, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Point {
    pub x: u32,
    pub y: u32,
}

impl Point {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    /// Rounds a sub-pixel position half away from zero and clamps it to
    /// `[0, max_x] × [0, max_y]`.
    pub fn from_f64(x: f64, y: f64, max_x: u32, max_y: u32) -> Self {
        Self {
            x: round_coord(x).clamp(0, max_x as i64) as u32,
            y: round_coord(y).clamp(0, max_y as i64) as u32,
        }
    }
}

impl From<[u32; 2]> for Point {
    fn from([x, y]: [u32; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [u32; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Half-away-from-zero rounding used for every sub-pixel coordinate.
pub fn round_coord(v: f64) -> i64 {
    v.round() as i64
}

/// Row-major 8-bit RGB chart raster.
#[derive(Clone, PartialEq, Eq)]
pub struct ChartImage {
    id: String,
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl fmt::Debug for ChartImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartImage")
            .field("id", &self.id)
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl ChartImage {
    pub fn new(id: impl Into<String>, width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, GeometryError> {
        if width < MIN_CHART_SIDE || height < MIN_CHART_SIDE {
            return Err(GeometryError::ChartTooSmall { width, height });
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(GeometryError::PixelCount { expected, actual: pixels.len() });
        }
        Ok(Self { id: id.into(), width, height, pixels })
    }

    pub fn filled(id: impl Into<String>, width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, GeometryError> {
        let pixels = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self::new(id, width, height, pixels)
    }

    pub fn from_rgb_image(id: impl Into<String>, img: RgbImage) -> Result<Self, GeometryError> {
        let (w, h) = img.dimensions();
        Self::new(id, w, h, img.into_raw())
    }

    /// Loads any PNG (or other enabled format) and converts it to RGB8. The id
    /// defaults to the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let path = path.as_ref();
        let img = image::open(path)?.to_rgb8();
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::from_rgb_image(id, img)
    }

    pub fn decode_png(id: impl Into<String>, bytes: &[u8]) -> Result<Self, GeometryError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?.to_rgb8();
        Self::from_rgb_image(id, img)
    }

    pub fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.pixels.clone()).expect("buffer size checked at construction")
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, GeometryError> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.to_rgb_image().write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Bar,
    Pie,
    Line,
}

impl ChartKind {
    pub const ALL: [ChartKind; 3] = [ChartKind::Bar, ChartKind::Pie, ChartKind::Line];

    pub fn as_str(self) -> &'static str {
        match self {
            ChartKind::Bar => "bar",
            ChartKind::Pie => "pie",
            ChartKind::Line => "line",
        }
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ChartKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bar" => Ok(ChartKind::Bar),
            "pie" => Ok(ChartKind::Pie),
            "line" => Ok(ChartKind::Line),
            other => Err(format!("unknown chart kind {other:?} (expected bar, pie or line)")),
        }
    }
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    pub const fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> u32 {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> u32 {
        self.y1.saturating_sub(self.y0)
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    /// Grows the rectangle by `margin` on every side, clamped to `dims`.
    pub fn expand(&self, margin: u32, dims: Dims) -> Rect {
        Rect {
            x0: self.x0.saturating_sub(margin),
            y0: self.y0.saturating_sub(margin),
            x1: (self.x1 + margin).min(dims.width),
            y1: (self.y1 + margin).min(dims.height),
        }
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }

    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)
    }
}

/// Spatial footprint of a chart element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geometry {
    Box(Rect),
    Polygon { points: Vec<Point> },
    MaskRle(RleMask),
}

impl Geometry {
    /// Pixel spans of the rasterized geometry. Masks must match `dims`.
    pub fn spans(&self, dims: Dims) -> Result<SpanSet, GeometryError> {
        match self {
            Geometry::Box(r) => Ok(SpanSet::from_rect(&clip_rect(r, dims))),
            Geometry::Polygon { points } => Ok(SpanSet::from_polygon(points, Some(dims))),
            Geometry::MaskRle(m) => {
                if m.dims() != dims {
                    return Err(GeometryError::DimensionMismatch { a: m.dims(), b: dims });
                }
                Ok(m.spans())
            }
        }
    }

    pub fn bbox(&self) -> Option<Rect> {
        match self {
            Geometry::Box(r) => Some(*r),
            Geometry::Polygon { points } => {
                let x0 = points.iter().map(|p| p.x).min()?;
                let y0 = points.iter().map(|p| p.y).min()?;
                let x1 = points.iter().map(|p| p.x).max()?;
                let y1 = points.iter().map(|p| p.y).max()?;
                Some(Rect::new(x0, y0, x1, y1))
            }
            Geometry::MaskRle(m) => m.spans().bbox(),
        }
    }
}

fn clip_rect(r: &Rect, dims: Dims) -> Rect {
    Rect::new(r.x0.min(dims.width), r.y0.min(dims.height), r.x1.min(dims.width), r.y1.min(dims.height))
}

/// A chart element's footprint together with its kind and optional mark label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub kind: ChartKind,
    pub geometry: Geometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Region {
    pub fn new(kind: ChartKind, geometry: Geometry) -> Self {
        Self { kind, geometry, label: None }
    }

    pub fn boxed(kind: ChartKind, rect: Rect) -> Self {
        Self::new(kind, Geometry::Box(rect))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn spans(&self, dims: Dims) -> Result<SpanSet, GeometryError> {
        self.geometry.spans(dims)
    }

    pub fn bbox(&self) -> Option<Rect> {
        self.geometry.bbox()
    }

    /// Checks the region invariants against the chart it belongs to.
    pub fn validate(&self, dims: Dims) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidRegion(msg));
        match &self.geometry {
            Geometry::Box(r) => {
                if r.x0 >= r.x1 || r.y0 >= r.y1 {
                    return bad(format!("box {r:?} is empty"));
                }
                if r.x1 > dims.width || r.y1 > dims.height {
                    return bad(format!("box {r:?} exceeds {dims}"));
                }
            }
            Geometry::Polygon { points } => {
                if points.len() < 3 {
                    return bad(format!("polygon has {} vertices", points.len()));
                }
                if let Some(p) = points.iter().find(|p| p.x > dims.width || p.y > dims.height) {
                    return bad(format!("polygon vertex {p:?} exceeds {dims}"));
                }
                if !polygon_is_simple(points) {
                    return bad("polygon self-intersects".into());
                }
            }
            Geometry::MaskRle(m) => {
                if m.dims() != dims {
                    return Err(GeometryError::DimensionMismatch { a: m.dims(), b: dims });
                }
            }
        }
        Ok(())
    }
}

/// Exact pixel count of the rasterized region.
pub fn region_area(r: &Region) -> u64 {
    match &r.geometry {
        Geometry::Box(b) => b.area(),
        Geometry::Polygon { points } => SpanSet::from_polygon(points, None).area(),
        Geometry::MaskRle(m) => m.count_ones(),
    }
}

/// Intersection over union of two rasterized regions on a `dims` chart.
pub fn iou(a: &Region, b: &Region, dims: Dims) -> Result<f64, GeometryError> {
    let sa = a.spans(dims)?;
    let sb = b.spans(dims)?;
    Ok(sa.iou(&sb))
}

/// Per-row horizontal pixel runs `[x0, x1)`, sorted by row then column and
/// never overlapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpanSet {
    spans: Vec<Span>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub y: u32,
    pub x0: u32,
    pub x1: u32,
}

impl SpanSet {
    /// Builds a normalized set from arbitrary, possibly overlapping spans.
    pub fn from_spans(mut spans: Vec<Span>) -> Self {
        spans.retain(|s| s.x0 < s.x1);
        spans.sort_unstable();
        let mut out: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans {
            match out.last_mut() {
                Some(last) if last.y == s.y && s.x0 <= last.x1 => last.x1 = last.x1.max(s.x1),
                _ => out.push(s),
            }
        }
        Self { spans: out }
    }

    pub fn from_rect(r: &Rect) -> Self {
        if r.is_empty() {
            return Self::default();
        }
        Self { spans: (r.y0..r.y1).map(|y| Span { y, x0: r.x0, x1: r.x1 }).collect() }
    }

    /// Even-odd scanline fill sampling pixel centers. When `clip` is given the
    /// result is restricted to the chart.
    pub fn from_polygon(points: &[Point], clip: Option<Dims>) -> Self {
        if points.len() < 3 {
            return Self::default();
        }
        let ymin = points.iter().map(|p| p.y).min().unwrap_or(0);
        let mut ymax = points.iter().map(|p| p.y).max().unwrap_or(0);
        if let Some(d) = clip {
            ymax = ymax.min(d.height);
        }
        let mut spans = Vec::new();
        let mut xs: Vec<f64> = Vec::new();
        for y in ymin..ymax {
            let yc = y as f64 + 0.5;
            xs.clear();
            for (i, a) in points.iter().enumerate() {
                let b = points[(i + 1) % points.len()];
                let (ay, by) = (a.y as f64, b.y as f64);
                if (ay > yc) != (by > yc) {
                    xs.push(a.x as f64 + (yc - ay) * (b.x as f64 - a.x as f64) / (by - ay));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                // pixel x is inside iff pair[0] <= x + 0.5 < pair[1]
                let lo = (pair[0] - 0.5).ceil().max(0.0) as u32;
                let mut hi = (pair[1] - 0.5).ceil().max(0.0) as u32;
                if let Some(d) = clip {
                    hi = hi.min(d.width);
                }
                if lo < hi {
                    spans.push(Span { y, x0: lo, x1: hi });
                }
            }
        }
        Self::from_spans(spans)
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn area(&self) -> u64 {
        self.spans.iter().map(|s| (s.x1 - s.x0) as u64).sum()
    }

    pub fn bbox(&self) -> Option<Rect> {
        let first = self.spans.first()?;
        let last = self.spans.last()?;
        let x0 = self.spans.iter().map(|s| s.x0).min()?;
        let x1 = self.spans.iter().map(|s| s.x1).max()?;
        Some(Rect::new(x0, first.y, x1, last.y + 1))
    }

    pub fn contains(&self, p: Point) -> bool {
        let idx = self.spans.partition_point(|s| (s.y, s.x1) <= (p.y, p.x));
        self.spans.get(idx).is_some_and(|s| s.y == p.y && s.x0 <= p.x && p.x < s.x1)
    }

    pub fn intersection_area(&self, other: &SpanSet) -> u64 {
        let (a, b) = (&self.spans, &other.spans);
        let (mut i, mut j) = (0, 0);
        let mut total = 0u64;
        while i < a.len() && j < b.len() {
            let (sa, sb) = (a[i], b[j]);
            if sa.y != sb.y {
                if sa.y < sb.y {
                    i += 1;
                } else {
                    j += 1;
                }
                continue;
            }
            let lo = sa.x0.max(sb.x0);
            let hi = sa.x1.min(sb.x1);
            if lo < hi {
                total += (hi - lo) as u64;
            }
            if sa.x1 <= sb.x1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    pub fn union(&self, other: &SpanSet) -> SpanSet {
        let mut all = self.spans.clone();
        all.extend_from_slice(&other.spans);
        SpanSet::from_spans(all)
    }

    pub fn iou(&self, other: &SpanSet) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn iter_pixels(&self) -> impl Iterator<Item = Point> + '_ {
        self.spans.iter().flat_map(|s| (s.x0..s.x1).map(move |x| Point::new(x, s.y)))
    }
}

/// True when no two non-adjacent edges of the closed polygon touch and no
/// two adjacent edges fold back onto each other.
pub fn polygon_is_simple(points: &[Point]) -> bool {
    let n = points.len();
    if n < 3 {
        return false;
    }
    let p = |i: usize| {
        let q = points[i % n];
        (q.x as i64, q.y as i64)
    };
    for i in 0..n {
        if p(i) == p(i + 1) {
            return false;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (a, b, c, d) = (p(i), p(i + 1), p(j), p(j + 1));
            if adjacent {
                // consecutive edges only share their joint vertex; reject folds
                let (shared, other_a, other_b) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if orient(other_a, shared, other_b) == 0 && dot(other_a, shared, other_b) > 0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn orient(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> i64 {
    ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).signum()
}

/// Sign test for whether `a` and `c` lie on the same side of `b` along a line.
fn dot(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> i64 {
    (a.0 - b.0) * (c.0 - b.0) + (a.1 - b.1) * (c.1 - b.1)
}

fn on_segment(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(a: (i64, i64), b: (i64, i64), c: (i64, i64), d: (i64, i64)) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && on_segment(a, b, c))
        || (o2 == 0 && on_segment(a, b, d))
        || (o3 == 0 && on_segment(c, d, a))
        || (o4 == 0 && on_segment(c, d, b))
}

/// Pie wedge polygon: the center followed by arc vertices every `step_deg` or
/// finer, rounded to integer pixels.
pub fn wedge_polygon(center: (f64, f64), radius: f64, a0: f64, a1: f64, step_deg: f64, max: (u32, u32)) -> Vec<Point> {
    let span = a1 - a0;
    let steps = ((span.to_degrees() / step_deg).ceil() as usize).max(1);
    let mut pts = vec![Point::from_f64(center.0, center.1, max.0, max.1)];
    for k in 0..=steps {
        let a = a0 + span * k as f64 / steps as f64;
        let p = Point::from_f64(center.0 + radius * a.cos(), center.1 + radius * a.sin(), max.0, max.1);
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    }
    if pts.len() > 1 && pts.last() == pts.first() {
        pts.pop();
    }
    pts
}

/// One labeled candidate element together with where its tag is drawn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mark {
    pub region: Region,
    pub anchor: Point,
    /// False when refinement rejected or failed and the heuristic geometry
    /// was kept.
    pub refined: bool,
}

impl Mark {
    pub fn label(&self) -> &str {
        self.region.label.as_deref().unwrap_or_default()
    }
}

/// Ordered, uniquely labeled marks overlaid on one chart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MarkSetRepr", into = "MarkSetRepr")]
pub struct MarkSet {
    chart_id: String,
    dims: Dims,
    marks: Vec<Mark>,
    warnings: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct MarkSetRepr {
    chart_id: String,
    width: u32,
    height: u32,
    marks: Vec<Mark>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

impl TryFrom<MarkSetRepr> for MarkSet {
    type Error = GeometryError;

    fn try_from(r: MarkSetRepr) -> Result<Self, Self::Error> {
        let mut set = MarkSet::new(r.chart_id, Dims::new(r.width, r.height), r.marks)?;
        set.warnings = r.warnings;
        Ok(set)
    }
}

impl From<MarkSet> for MarkSetRepr {
    fn from(m: MarkSet) -> Self {
        MarkSetRepr { chart_id: m.chart_id, width: m.dims.width, height: m.dims.height, marks: m.marks, warnings: m.warnings }
    }
}

impl MarkSet {
    pub fn new(chart_id: impl Into<String>, dims: Dims, marks: Vec<Mark>) -> Result<Self, GeometryError> {
        let mut index = HashMap::with_capacity(marks.len());
        for (i, m) in marks.iter().enumerate() {
            let label = m.region.label.as_deref().ok_or(GeometryError::MissingLabel(i))?;
            if index.insert(label.to_ascii_uppercase(), i).is_some() {
                return Err(GeometryError::DuplicateLabel(label.to_string()));
            }
        }
        Ok(Self { chart_id: chart_id.into(), dims, marks, warnings: Vec::new(), index })
    }

    pub fn empty(chart_id: impl Into<String>, dims: Dims) -> Self {
        Self { chart_id: chart_id.into(), dims, marks: Vec::new(), warnings: Vec::new(), index: HashMap::new() }
    }

    pub fn with_warning(mut self, w: impl Into<String>) -> Self {
        self.warnings.push(w.into());
        self
    }

    pub fn chart_id(&self) -> &str {
        &self.chart_id
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn regions(&self) -> impl Iterator<Item = &Region> {
        self.marks.iter().map(|m| &m.region)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.marks.iter().map(Mark::label)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Case-insensitive label lookup.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(&label.trim().to_ascii_uppercase()).copied()
    }

    pub fn get(&self, label: &str) -> Option<&Mark> {
        self.index_of(label).map(|i| &self.marks[i])
    }
}

/// The regions chosen as evidence for one response.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttributionSet {
    pub chart_id: String,
    pub response: String,
    pub selected: Vec<Region>,
}
