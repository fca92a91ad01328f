use serde::{Deserialize, Serialize};

use crate::geometry::{Dims, Geometry, GeometryError, Point, Region, SpanSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub iou_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { iou_threshold: 0.9 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.iou_threshold > 0.0 && self.iou_threshold <= 1.0 {
            Ok(())
        } else {
            Err(format!("iou_threshold {} must lie in (0, 1]", self.iou_threshold))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMatch {
    pub detected: usize,
    pub gt: usize,
    pub iou: f64,
}

/// Greedy one-to-one matching by descending IoU, keeping only pairs at or
/// above the threshold. Ties break on (detected, gt) index.
pub fn match_regions(detected: &[Region], gt: &[Region], dims: Dims, cfg: &EvalConfig) -> Result<Vec<RegionMatch>, GeometryError> {
    let ds: Vec<SpanSet> = detected.iter().map(|r| r.spans(dims)).collect::<Result<_, _>>()?;
    let gs: Vec<SpanSet> = gt.iter().map(|r| r.spans(dims)).collect::<Result<_, _>>()?;
    let mut pairs = Vec::new();
    for (i, d) in ds.iter().enumerate() {
        let Some(db) = d.bbox() else { continue };
        for (j, g) in gs.iter().enumerate() {
            if !g.bbox().is_some_and(|gb| gb.intersects(&db)) {
                continue;
            }
            let v = d.iou(g);
            if v >= cfg.iou_threshold {
                pairs.push(RegionMatch { detected: i, gt: j, iou: v });
            }
        }
    }
    pairs.sort_by(|a, b| b.iou.total_cmp(&a.iou).then(a.detected.cmp(&b.detected)).then(a.gt.cmp(&b.gt)));
    let mut used_d = vec![false; ds.len()];
    let mut used_g = vec![false; gs.len()];
    let mut out = Vec::new();
    for m in pairs {
        if !used_d[m.detected] && !used_g[m.gt] {
            used_d[m.detected] = true;
            used_g[m.gt] = true;
            out.push(m);
        }
    }
    Ok(out)
}

/// Precision, recall and F1 as fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// P is 0 when nothing was detected; F1 is 0 when P + R is 0.
    pub fn from_counts(matched: usize, detected: usize, gt: usize) -> Prf {
        let precision = if detected == 0 { 0.0 } else { matched as f64 / detected as f64 };
        let recall = if gt == 0 { 0.0 } else { matched as f64 / gt as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Prf { precision, recall, f1 }
    }

    pub fn percent(self) -> Prf {
        Prf { precision: self.precision * 100.0, recall: self.recall * 100.0, f1: self.f1 * 100.0 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("record has no ground-truth regions")]
    EmptyGroundTruth,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub fn prf1(detected: &[Region], gt: &[Region], dims: Dims, cfg: &EvalConfig) -> Result<Prf, MetricError> {
    if gt.is_empty() {
        return Err(MetricError::EmptyGroundTruth);
    }
    let matched = match_regions(detected, gt, dims, cfg)?.len();
    Ok(Prf::from_counts(matched, detected.len(), gt.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LineScore {
    /// Covered gt points over all gt points, in `[0, 1]`.
    pub detection_rate: f64,
    /// Union of detected pixels over chart pixels, in `[0, 1]`.
    pub area_fraction: f64,
    pub covered_points: usize,
    pub total_points: usize,
}

/// Point coverage is boundary-inclusive: a box `[x0, x1) × [y0, y1)` covers
/// `p` when `x0 <= p.x <= x1` and `y0 <= p.y <= y1`. Other geometries cover
/// the points whose pixel they contain.
pub fn point_covered(r: &Region, p: Point, dims: Dims) -> Result<bool, GeometryError> {
    Ok(match &r.geometry {
        Geometry::Box(b) => b.x0 <= p.x && p.x <= b.x1 && b.y0 <= p.y && p.y <= b.y1,
        _ => r.spans(dims)?.contains(p),
    })
}

pub fn line_metrics(detected: &[Region], gt_points: &[Point], dims: Dims) -> Result<LineScore, GeometryError> {
    let mut union = SpanSet::default();
    for r in detected {
        union = union.union(&r.spans(dims)?);
    }
    let mut covered = 0;
    for &p in gt_points {
        let mut hit = false;
        for r in detected {
            if point_covered(r, p, dims)? {
                hit = true;
                break;
            }
        }
        covered += hit as usize;
    }
    let detection_rate = if gt_points.is_empty() { 0.0 } else { covered as f64 / gt_points.len() as f64 };
    Ok(LineScore { detection_rate, area_fraction: union.area() as f64 / dims.area() as f64, covered_points: covered, total_points: gt_points.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ChartKind, Rect};

    fn bx(x0: u32, y0: u32, x1: u32, y1: u32) -> Region {
        Region::boxed(ChartKind::Bar, Rect::new(x0, y0, x1, y1))
    }

    #[test]
    fn identical_sets_match_perfectly() {
        let gt = vec![bx(0, 0, 10, 10), bx(20, 0, 30, 10)];
        let m = match_regions(&gt, &gt, Dims::new(40, 40), &EvalConfig::default()).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.iter().all(|m| m.iou == 1.0));
    }

    #[test]
    fn iou_085_misses_threshold_090() {
        // 100x20 gt vs 85x20 detection: 1700/2000
        let m = match_regions(&[bx(0, 0, 85, 20)], &[bx(0, 0, 100, 20)], Dims::new(128, 32), &EvalConfig::default()).unwrap();
        assert!(m.is_empty());
        let loose = EvalConfig { iou_threshold: 0.85 };
        let m = match_regions(&[bx(0, 0, 85, 20)], &[bx(0, 0, 100, 20)], Dims::new(128, 32), &loose).unwrap();
        assert!((m[0].iou - 0.85).abs() < 1e-12);
    }

    #[test]
    fn higher_iou_wins_competition() {
        let gt = [bx(0, 0, 100, 20)];
        let det = [bx(0, 0, 95, 20), bx(0, 0, 98, 20)];
        let m = match_regions(&det, &gt, Dims::new(128, 32), &EvalConfig::default()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].detected, 1);
    }

    #[test]
    fn prf_cases() {
        let d = Dims::new(100, 100);
        let cfg = EvalConfig::default();
        let gt = vec![bx(0, 0, 10, 10), bx(20, 0, 30, 10), bx(40, 0, 50, 10)];
        let det = vec![bx(0, 0, 10, 10), bx(20, 0, 30, 10), bx(60, 60, 70, 70)];
        let p = prf1(&det, &gt, d, &cfg).unwrap();
        for v in [p.precision, p.recall, p.f1] {
            assert!((v - 2.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(prf1(&[], &gt, d, &cfg).unwrap(), Prf::default());
        assert_eq!(prf1(&gt, &gt, d, &cfg).unwrap(), Prf { precision: 1.0, recall: 1.0, f1: 1.0 });
        assert!(matches!(prf1(&det, &[], d, &cfg), Err(MetricError::EmptyGroundTruth)));
    }

    #[test]
    fn line_metric_cases() {
        let d = Dims::new(100, 100);
        let pts = [Point::new(10, 10), Point::new(50, 50), Point::new(90, 90)];
        let s = line_metrics(&[bx(0, 0, 60, 60)], &pts, d).unwrap();
        assert!((s.detection_rate - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.area_fraction - 0.36).abs() < 1e-12);
        let s = line_metrics(&[bx(0, 0, 100, 100)], &pts, d).unwrap();
        assert_eq!((s.detection_rate, s.area_fraction), (1.0, 1.0));
        let s = line_metrics(&[], &pts, d).unwrap();
        assert_eq!((s.detection_rate, s.area_fraction), (0.0, 0.0));
    }

    #[test]
    fn overlapping_boxes_are_not_double_counted() {
        let s = line_metrics(&[bx(0, 0, 10, 10), bx(5, 5, 15, 15)], &[Point::new(0, 0)], Dims::new(20, 20)).unwrap();
        assert!((s.area_fraction - 175.0 / 400.0).abs() < 1e-12);
    }
}
