//! Point-prompted refinement of heuristic regions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{ChartImage, Geometry, Point, Region, SpanSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub n_points: usize,
    pub accept_min_iou: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { n_points: 5, accept_min_iou: 0.5 }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_points == 0 {
            return Err("n_points must be at least 1".into());
        }
        if !(self.accept_min_iou > 0.0 && self.accept_min_iou <= 1.0) {
            return Err(format!("accept_min_iou {} must lie in (0, 1]", self.accept_min_iou));
        }
        Ok(())
    }
}

/// Backend reply: a candidate geometry and a confidence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutput {
    pub geometry: Geometry,
    pub score: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum RefineError {
    #[error("refiner unavailable: {0}")]
    Unavailable(String),
    #[error("refiner returned an invalid mask: {0}")]
    InvalidMask(String),
}

pub trait RefinementBackend: Send + Sync {
    fn refine(&self, img: &ChartImage, region: &Region, points: &[Point]) -> Result<RefineOutput, RefineError>;
}

/// Returns the heuristic geometry unchanged with confidence 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityRefiner;

impl RefinementBackend for IdentityRefiner {
    fn refine(&self, _img: &ChartImage, region: &Region, _points: &[Point]) -> Result<RefineOutput, RefineError> {
        Ok(RefineOutput { geometry: region.geometry.clone(), score: 1.0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    pub region: Region,
    pub refined: bool,
    pub warning: Option<String>,
}

/// Accepts the backend mask iff it is nonempty and overlaps the heuristic
/// region with IoU at least `accept_min_iou`; otherwise keeps the original.
pub fn refine_region(img: &ChartImage, r: &Region, cfg: &RefineConfig, backend: &dyn RefinementBackend) -> Refined {
    let dims = img.dims();
    let keep = |warning: Option<String>| Refined { region: r.clone(), refined: false, warning };
    let Ok(original) = r.spans(dims) else {
        return keep(Some(format!("region {} cannot be rasterized", r.label.as_deref().unwrap_or("?"))));
    };
    let points = sample_prompt_points(r, &original, cfg.n_points);
    let out = match backend.refine(img, r, &points) {
        Ok(o) => o,
        Err(e) => {
            log::warn!("refinement of {} failed: {e}", r.label.as_deref().unwrap_or("?"));
            return keep(Some(e.to_string()));
        }
    };
    let candidate = Region { kind: r.kind, geometry: out.geometry, label: r.label.clone() };
    let spans = match candidate.validate(dims).and_then(|_| candidate.spans(dims)) {
        Ok(s) => s,
        Err(e) => return keep(Some(format!("refiner geometry rejected: {e}"))),
    };
    if spans.is_empty() || spans.iou(&original) < cfg.accept_min_iou {
        return keep(None);
    }
    Refined { region: candidate, refined: true, warning: None }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Chessboard distance to the nearest non-member pixel, over the bbox grid.
fn distance_map(spans: &SpanSet) -> Option<(crate::geometry::Rect, Vec<u32>)> {
    let bb = spans.bbox()?;
    let (w, h) = (bb.width() as usize, bb.height() as usize);
    let mut d = vec![0u32; w * h];
    for p in spans.iter_pixels() {
        d[(p.y - bb.y0) as usize * w + (p.x - bb.x0) as usize] = u32::MAX;
    }
    let at = |d: &[u32], x: isize, y: isize| -> u32 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0
        } else {
            d[y as usize * w + x as usize]
        }
    };
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            if d[i] == 0 {
                continue;
            }
            let m = [at(&d, x - 1, y), at(&d, x - 1, y - 1), at(&d, x, y - 1), at(&d, x + 1, y - 1)].into_iter().min().unwrap();
            d[i] = d[i].min(m.saturating_add(1));
        }
    }
    for y in (0..h as isize).rev() {
        for x in (0..w as isize).rev() {
            let i = y as usize * w + x as usize;
            if d[i] == 0 {
                continue;
            }
            let m = [at(&d, x + 1, y), at(&d, x + 1, y + 1), at(&d, x, y + 1), at(&d, x - 1, y + 1)].into_iter().min().unwrap();
            d[i] = d[i].min(m.saturating_add(1));
        }
    }
    Some((bb, d))
}

/// `n` prompt points inside the region: the deepest interior pixel (ties go
/// to the one nearest the centroid) and `n - 1` pixels at distance >= 2 drawn
/// with a seed derived from the region. Regions with no such pixels fall
/// back to the centroid, repeated.
pub fn sample_prompt_points(r: &Region, spans: &SpanSet, n: usize) -> Vec<Point> {
    let n = n.max(1);
    let Some((bb, d)) = distance_map(spans) else {
        return Vec::new();
    };
    let w = bb.width() as usize;
    let area = spans.area() as f64;
    let (sx, sy) = spans.iter_pixels().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x as f64, sy + p.y as f64));
    let (cx, cy) = (sx / area, sy / area);
    let at = |p: Point| d[(p.y - bb.y0) as usize * w + (p.x - bb.x0) as usize];

    let deep: Vec<Point> = spans.iter_pixels().filter(|p| at(*p) >= 2).collect();
    if deep.is_empty() {
        let c = Point::new(cx.round() as u32, cy.round() as u32);
        return vec![c; n];
    }
    let dist2 = |p: &Point| (p.x as f64 - cx).powi(2) + (p.y as f64 - cy).powi(2);
    let best = *deep
        .iter()
        .max_by(|a, b| at(**a).cmp(&at(**b)).then(dist2(b).total_cmp(&dist2(a))).then((b.y, b.x).cmp(&(a.y, a.x))))
        .unwrap();
    let mut out = vec![best];
    let seed = fnv1a(serde_json::to_string(r).unwrap_or_default().as_bytes());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if deep.len() > n {
        let mut picks = rand::seq::index::sample(&mut rng, deep.len(), n - 1).into_vec();
        picks.sort_unstable();
        out.extend(picks.into_iter().map(|i| deep[i]));
    } else {
        out.extend((1..n).map(|_| deep[rng.random_range(0..deep.len())]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ChartKind, Dims, Rect};
    use crate::rle::RleMask;

    fn bar(x0: u32, y0: u32, x1: u32, y1: u32) -> Region {
        Region::boxed(ChartKind::Bar, Rect::new(x0, y0, x1, y1)).with_label("B1")
    }

    struct Fixed(Geometry);

    impl RefinementBackend for Fixed {
        fn refine(&self, _: &ChartImage, _: &Region, _: &[Point]) -> Result<RefineOutput, RefineError> {
            Ok(RefineOutput { geometry: self.0.clone(), score: 0.9 })
        }
    }

    struct Down;

    impl RefinementBackend for Down {
        fn refine(&self, _: &ChartImage, _: &Region, _: &[Point]) -> Result<RefineOutput, RefineError> {
            Err(RefineError::Unavailable("connection refused".into()))
        }
    }

    fn canvas() -> ChartImage {
        ChartImage::filled("c", 200, 200, [255, 255, 255]).unwrap()
    }

    fn mask(r: Rect) -> Geometry {
        Geometry::MaskRle(RleMask::from_spans(Dims::new(200, 200), &SpanSet::from_rect(&r)))
    }

    #[test]
    fn square_center_is_deepest() {
        let r = bar(0, 0, 100, 100);
        let pts = sample_prompt_points(&r, &r.spans(Dims::new(200, 200)).unwrap(), 1);
        assert_eq!(pts.len(), 1);
        assert!(pts[0].x.abs_diff(50) <= 1 && pts[0].y.abs_diff(50) <= 1, "{:?}", pts[0]);
    }

    #[test]
    fn points_are_members_and_deterministic() {
        let r = Region::new(ChartKind::Pie, Geometry::Polygon { points: vec![Point::new(10, 10), Point::new(120, 30), Point::new(40, 150)] });
        let s = r.spans(Dims::new(200, 200)).unwrap();
        let a = sample_prompt_points(&r, &s, 5);
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|p| s.contains(*p)));
        assert_eq!(a, sample_prompt_points(&r, &s, 5));
    }

    #[test]
    fn thin_region_uses_centroid() {
        let r = bar(10, 10, 60, 11);
        let pts = sample_prompt_points(&r, &r.spans(Dims::new(200, 200)).unwrap(), 3);
        assert_eq!(pts, vec![Point::new(35, 10); 3]);
    }

    #[test]
    fn identity_keeps_geometry_and_marks_refined() {
        let r = bar(10, 10, 50, 90);
        let out = refine_region(&canvas(), &r, &RefineConfig::default(), &IdentityRefiner);
        assert_eq!(out.region, r);
        assert!(out.refined);
    }

    #[test]
    fn shifted_mask_is_rejected() {
        // 40x80 bar, mask shifted 24 px (60%) right: iou = 16/64 = 0.25
        let r = bar(10, 10, 50, 90);
        let out = refine_region(&canvas(), &r, &RefineConfig::default(), &Fixed(mask(Rect::new(34, 10, 74, 90))));
        assert!(!out.refined);
        assert_eq!(out.region, r);
    }

    #[test]
    fn tightened_mask_is_accepted() {
        // 40x80 bar vs 32x80 mask inside it: iou 0.8
        let r = bar(10, 10, 50, 90);
        let g = mask(Rect::new(14, 10, 46, 90));
        let out = refine_region(&canvas(), &r, &RefineConfig::default(), &Fixed(g.clone()));
        assert!(out.refined);
        assert_eq!(out.region.geometry, g);
        assert_eq!(out.region.label.as_deref(), Some("B1"));
    }

    #[test]
    fn empty_mask_and_transport_errors_keep_original() {
        let r = bar(10, 10, 50, 90);
        let empty = Geometry::MaskRle(RleMask::from_spans(Dims::new(200, 200), &SpanSet::default()));
        assert!(!refine_region(&canvas(), &r, &RefineConfig::default(), &Fixed(empty)).refined);
        let out = refine_region(&canvas(), &r, &RefineConfig::default(), &Down);
        assert!(!out.refined);
        assert!(out.warning.unwrap().contains("unavailable"));
    }
}
