//! Bar detection: contours of the binarized chart, split by unique fill
//! color, filtered by shape, deduplicated and labeled left to right.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{ChartImage, ChartKind, Mark, MarkSet, Rect, Region};
use crate::refine::{refine_region, RefineConfig, RefinementBackend};
use crate::vision::{binarize, extract_contours, morph_clean, BinaryImage, Contour};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BarSegConfig {
    /// Minimum component area as a fraction of the image area.
    pub min_area_frac: f64,
    pub min_solidity: f64,
    /// Minimum component area over its bbox area.
    pub rect_fill_min: f64,
    /// Regions overlapping a larger one above this IoU are dropped.
    pub overlap_iou_max: f64,
    pub expand_px: u32,
    /// Components thinner than this in either direction are rules or axes.
    pub min_thickness_px: u32,
}

impl Default for BarSegConfig {
    fn default() -> Self {
        Self { min_area_frac: 0.0005, min_solidity: 0.85, rect_fill_min: 0.90, overlap_iou_max: 0.5, expand_px: 5, min_thickness_px: 4 }
    }
}

impl BarSegConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("min_area_frac", self.min_area_frac),
            ("min_solidity", self.min_solidity),
            ("rect_fill_min", self.rect_fill_min),
            ("overlap_iou_max", self.overlap_iou_max),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(format!("{name} {v} must lie in (0, 1]"));
            }
        }
        if self.min_area_frac >= 0.5 {
            return Err("min_area_frac must be below 0.5".into());
        }
        Ok(())
    }

    fn min_area(&self, img: &ChartImage) -> f64 {
        self.min_area_frac * img.dims().area() as f64
    }
}

fn quantize(rgb: [u8; 3]) -> [u8; 3] {
    [rgb[0] >> 3, rgb[1] >> 3, rgb[2] >> 3]
}

/// Splits one contour into single-color components. Only the contour's own
/// pixels inside its bbox (grown by `expand_px`) are considered; colors are
/// quantized to 32 levels per channel. Components must pass the area,
/// thickness, solidity and rectangularity checks.
pub fn decompose_by_color(img: &ChartImage, c: &Contour, cfg: &BarSegConfig) -> Vec<Region> {
    let win = c.bbox.expand(cfg.expand_px, img.dims());
    let min_area = cfg.min_area(img);
    let mut counts: BTreeMap<[u8; 3], u64> = BTreeMap::new();
    for p in c.pixels.iter_pixels() {
        *counts.entry(quantize(img.rgb(p.x, p.y))).or_default() += 1;
    }
    let mut out = Vec::new();
    for (color, n) in counts {
        if (n as f64) < min_area {
            continue;
        }
        let mut mask = BinaryImage::new(win.width(), win.height());
        for p in c.pixels.iter_pixels() {
            if win.contains(p) && quantize(img.rgb(p.x, p.y)) == color {
                mask.set(p.x - win.x0, p.y - win.y0, true);
            }
        }
        for comp in extract_contours(&mask) {
            let fill = comp.area as f64 / comp.bbox.area() as f64;
            let thin = comp.bbox.width().min(comp.bbox.height()) < cfg.min_thickness_px;
            if thin || (comp.area as f64) < min_area || comp.solidity < cfg.min_solidity || fill < cfg.rect_fill_min {
                continue;
            }
            let b = comp.bbox;
            let rect = Rect::new(b.x0 + win.x0, b.y0 + win.y0, b.x1 + win.x0, b.y1 + win.y0);
            out.push(Region::boxed(ChartKind::Bar, rect));
        }
    }
    out
}

/// Greedily keeps the larger region of any pair with IoU above
/// `overlap_iou_max`, then sorts by `(x0, y0)`.
pub fn dedup_and_sort(mut regions: Vec<Region>, cfg: &BarSegConfig) -> Vec<Region> {
    let boxes: Vec<Rect> = regions.iter().map(|r| r.bbox().unwrap_or_default()).collect();
    let mut order: Vec<usize> = (0..regions.len()).collect();
    order.sort_by(|&a, &b| boxes[b].area().cmp(&boxes[a].area()).then((boxes[a].x0, boxes[a].y0, a).cmp(&(boxes[b].x0, boxes[b].y0, b))));
    let mut keep: Vec<usize> = Vec::new();
    for i in order {
        if keep.iter().all(|&k| rect_iou(&boxes[i], &boxes[k]) <= cfg.overlap_iou_max) {
            keep.push(i);
        }
    }
    keep.sort_by_key(|&i| (boxes[i].x0, boxes[i].y0, boxes[i].x1, boxes[i].y1));
    let mut taken: Vec<Option<Region>> = regions.drain(..).map(Some).collect();
    keep.into_iter().filter_map(|i| taken[i].take()).collect()
}

fn rect_iou(a: &Rect, b: &Rect) -> f64 {
    let iw = a.x1.min(b.x1).saturating_sub(a.x0.max(b.x0)) as u64;
    let ih = a.y1.min(b.y1).saturating_sub(a.y0.max(b.y0)) as u64;
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Heuristic bar regions before refinement and labeling.
pub fn bar_candidates(img: &ChartImage, cfg: &BarSegConfig) -> Result<Vec<Region>, String> {
    let bin = binarize(img);
    if bin.degenerate {
        return Err("image has no contrast".into());
    }
    let clean = morph_clean(&bin.mask);
    let min_area = cfg.min_area(img);
    let regions = extract_contours(&clean)
        .iter()
        .filter(|c| c.area as f64 >= min_area)
        .flat_map(|c| decompose_by_color(img, c, cfg))
        .collect();
    Ok(dedup_and_sort(regions, cfg))
}

/// Full bar pipeline. Never fails: a chart without bars yields an empty
/// mark set carrying a warning.
pub fn detect_bars(img: &ChartImage, cfg: &BarSegConfig, refine_cfg: &RefineConfig, refiner: &dyn RefinementBackend) -> MarkSet {
    let regions = match bar_candidates(img, cfg) {
        Ok(r) => r,
        Err(w) => return MarkSet::empty(img.id(), img.dims()).with_warning(w),
    };
    if regions.is_empty() {
        return MarkSet::empty(img.id(), img.dims()).with_warning("no bars found");
    }
    let mut warnings = Vec::new();
    let marks: Vec<Mark> = regions
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let r = r.with_label(format!("B{}", i + 1));
            let anchor = r.bbox().unwrap_or_default().center();
            let out = refine_region(img, &r, refine_cfg, refiner);
            warnings.extend(out.warning);
            Mark { region: out.region, anchor, refined: out.refined }
        })
        .collect();
    let mut set = MarkSet::new(img.id(), img.dims(), marks).expect("labels are unique");
    for w in warnings {
        set = set.with_warning(w);
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Canvas;
    use crate::refine::IdentityRefiner;

    fn rb(x0: u32, y0: u32, x1: u32, y1: u32) -> Region {
        Region::boxed(ChartKind::Bar, Rect::new(x0, y0, x1, y1))
    }

    #[test]
    fn dedup_cases() {
        let cfg = BarSegConfig::default();
        assert_eq!(dedup_and_sort(vec![rb(0, 0, 10, 10), rb(0, 0, 10, 10)], &cfg).len(), 1);
        // 10x10 inside 10x(10/0.6): iou 0.6
        let big = rb(0, 0, 60, 100);
        let out = dedup_and_sort(vec![rb(0, 0, 60, 60), big.clone()], &cfg);
        assert_eq!(out, vec![big]);
        let out = dedup_and_sort(vec![rb(50, 0, 60, 10), rb(0, 0, 10, 10)], &cfg);
        assert_eq!(out, vec![rb(0, 0, 10, 10), rb(50, 0, 60, 10)]);
    }

    fn chart(draw: impl FnOnce(&mut Canvas)) -> ChartImage {
        let mut c = Canvas::new(400, 300, [255, 255, 255]);
        draw(&mut c);
        c.into_image("t").unwrap()
    }

    #[test]
    fn touching_bars_split_by_color() {
        let img = chart(|c| {
            c.fill_rect(Rect::new(100, 100, 130, 250), [31, 119, 180]);
            c.fill_rect(Rect::new(130, 60, 160, 250), [214, 39, 40]);
            c.fill_rect(Rect::new(160, 150, 190, 250), [44, 160, 44]);
        });
        let m = detect_bars(&img, &BarSegConfig::default(), &RefineConfig::default(), &IdentityRefiner);
        let boxes: Vec<Rect> = m.regions().map(|r| r.bbox().unwrap()).collect();
        assert_eq!(boxes, vec![Rect::new(100, 100, 130, 250), Rect::new(130, 60, 160, 250), Rect::new(160, 150, 190, 250)]);
        assert_eq!(m.labels().collect::<Vec<_>>(), ["B1", "B2", "B3"]);
    }

    #[test]
    fn single_bar_matches_its_box() {
        let img = chart(|c| c.fill_rect(Rect::new(50, 40, 90, 200), [60, 60, 160]));
        let m = detect_bars(&img, &BarSegConfig::default(), &RefineConfig::default(), &IdentityRefiner);
        assert_eq!(m.len(), 1);
        let b = m.marks()[0].region.bbox().unwrap();
        assert!(b.x0.abs_diff(50) <= 1 && b.y0.abs_diff(40) <= 1 && b.x1.abs_diff(90) <= 1 && b.y1.abs_diff(200) <= 1);
    }

    #[test]
    fn checkerboard_patch_fails_rectangularity() {
        let img = chart(|c| {
            for y in 0..60 {
                for x in 0..60 {
                    if (x / 6 + y / 6) % 2 == 0 {
                        c.put(100 + x, 100 + y, [20, 20, 20]);
                    }
                }
            }
        });
        let b = crate::vision::morph_clean(&binarize(&img).mask);
        let contours = extract_contours(&b);
        let regions: Vec<Region> = contours.iter().flat_map(|c| decompose_by_color(&img, c, &BarSegConfig::default())).collect();
        assert!(regions.is_empty());
    }

    #[test]
    fn axis_strip_under_bars_is_not_a_bar() {
        let img = chart(|c| {
            c.fill_rect(Rect::new(100, 120, 160, 250), [31, 119, 180]);
            c.fill_rect(Rect::new(220, 80, 280, 250), [31, 119, 180]);
            c.fill_rect(Rect::new(60, 250, 360, 252), [40, 40, 40]);
        });
        let m = detect_bars(&img, &BarSegConfig::default(), &RefineConfig::default(), &IdentityRefiner);
        let boxes: Vec<Rect> = m.regions().map(|r| r.bbox().unwrap()).collect();
        assert_eq!(boxes, vec![Rect::new(100, 120, 160, 250), Rect::new(220, 80, 280, 250)]);
    }

    #[test]
    fn blank_image_gives_empty_set() {
        let img = ChartImage::filled("w", 200, 200, [255, 255, 255]).unwrap();
        let m = detect_bars(&img, &BarSegConfig::default(), &RefineConfig::default(), &IdentityRefiner);
        assert!(m.is_empty());
        assert!(!m.warnings().is_empty());
    }
}
