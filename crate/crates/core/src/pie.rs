//! Pie sector detection: fit the disc, unroll it to a (radius × angle)
//! image, find angle columns crossed by a complete radial edge.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::geometry::{wedge_polygon, ChartImage, ChartKind, Geometry, Mark, MarkSet, Point, Region};
use crate::refine::{refine_region, RefineConfig, RefinementBackend};
use crate::vision::{binarize, extract_contours, luminance, min_enclosing_circle, morph_clean, Circle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PieSegConfig {
    pub angle_samples: usize,
    pub radius_samples: usize,
    pub sobel_mag_quantile: f64,
    /// Fraction of the considered radial rows an edge column must cover.
    pub complete_edge_min_span: f64,
    /// Boundary columns closer than this many degrees are merged.
    pub min_sector_angle: f64,
    /// Inner fraction of the radius ignored when checking edge span.
    pub inner_ignore_frac: f64,
    /// Angular slack, in degrees, when testing whether a row has an edge in
    /// a column; absorbs sub-pixel center error at small radii.
    pub column_tolerance_deg: f64,
    /// Angular step of the wedge polygon arc, in degrees.
    pub arc_step_deg: f64,
}

impl Default for PieSegConfig {
    fn default() -> Self {
        Self {
            angle_samples: 720,
            radius_samples: 64,
            sobel_mag_quantile: 0.90,
            complete_edge_min_span: 0.80,
            min_sector_angle: 4.0,
            inner_ignore_frac: 0.2,
            column_tolerance_deg: 1.0,
            arc_step_deg: 2.0,
        }
    }
}

impl PieSegConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.angle_samples < 180 || self.radius_samples < 16 {
            return Err("need at least 180 angle samples and 16 radius samples".into());
        }
        for (name, v) in [("sobel_mag_quantile", self.sobel_mag_quantile), ("complete_edge_min_span", self.complete_edge_min_span)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(format!("{name} {v} must lie in (0, 1)"));
            }
        }
        if !(0.0..1.0).contains(&self.inner_ignore_frac) {
            return Err("inner_ignore_frac must lie in [0, 1)".into());
        }
        if self.min_sector_angle <= 0.0 || self.arc_step_deg <= 0.0 || self.column_tolerance_deg < 0.0 {
            return Err("angles must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PieError {
    #[error("no pie found")]
    NoPie,
    #[error("pie too small (radius {0:.1} px)")]
    TooSmall(f64),
    #[error("sector boundaries not found")]
    NoBoundaries,
}

/// Grayscale samples on a polar grid: `intensities[i][j]` is taken at
/// radius `radii[i]` and angle `angles[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnrolledPie {
    pub intensities: Vec<Vec<f64>>,
    pub angles: Vec<f64>,
    pub radii: Vec<f64>,
}

fn gray_plane(img: &ChartImage) -> Vec<f64> {
    img.pixels().chunks_exact(3).map(|p| luminance([p[0], p[1], p[2]]) as f64).collect()
}

fn border_gray(img: &ChartImage, gray: &[f64]) -> f64 {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (mut sum, mut n) = (0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            if x < 2 || y < 2 || x + 2 >= w || y + 2 >= h {
                sum += gray[y * w + x];
                n += 1;
            }
        }
    }
    sum / n as f64
}

/// Bilinear sampling at continuous image coordinates, where pixel `(x, y)`
/// has its center at `(x + 0.5, y + 0.5)`. Taps outside the image read `bg`.
fn bilinear(gray: &[f64], w: usize, h: usize, px: f64, py: f64, bg: f64) -> f64 {
    let (u, v) = (px - 0.5, py - 0.5);
    let (x0, y0) = (u.floor(), v.floor());
    let (fx, fy) = (u - x0, v - y0);
    let tap = |x: f64, y: f64| {
        if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
            bg
        } else {
            gray[y as usize * w + x as usize]
        }
    };
    let top = tap(x0, y0) * (1.0 - fx) + tap(x0 + 1.0, y0) * fx;
    let bot = tap(x0, y0 + 1.0) * (1.0 - fx) + tap(x0 + 1.0, y0 + 1.0) * fx;
    top * (1.0 - fy) + bot * fy
}

/// Resamples the disc at radii `r·(i+1)/R` and angles `2πj/A`.
pub fn unroll_polar(img: &ChartImage, circle: &Circle, cfg: &PieSegConfig) -> Result<UnrolledPie, PieError> {
    if circle.r < 8.0 {
        return Err(PieError::TooSmall(circle.r));
    }
    let gray = gray_plane(img);
    let bg = border_gray(img, &gray);
    let (w, h) = (img.width() as usize, img.height() as usize);
    let radii: Vec<f64> = (0..cfg.radius_samples).map(|i| circle.r * (i + 1) as f64 / cfg.radius_samples as f64).collect();
    let angles: Vec<f64> = (0..cfg.angle_samples).map(|j| TAU * j as f64 / cfg.angle_samples as f64).collect();
    let trig: Vec<(f64, f64)> = angles.iter().map(|a| (a.cos(), a.sin())).collect();
    let intensities = radii
        .iter()
        .map(|&r| trig.iter().map(|&(c, s)| bilinear(&gray, w, h, circle.cx + r * c, circle.cy + r * s, bg)).collect())
        .collect();
    Ok(UnrolledPie { intensities, angles, radii })
}

/// Sobel response along the angle axis (wrapping), rows clamped.
fn sobel_angle(u: &UnrolledPie) -> Vec<Vec<f64>> {
    let rows = u.intensities.len();
    let cols = u.angles.len();
    let at = |i: usize, j: isize| u.intensities[i][j.rem_euclid(cols as isize) as usize];
    (0..rows)
        .map(|i| {
            let (up, dn) = (i.saturating_sub(1), (i + 1).min(rows - 1));
            (0..cols as isize)
                .map(|j| {
                    let gx = (at(up, j + 1) - at(up, j - 1)) + 2.0 * (at(i, j + 1) - at(i, j - 1)) + (at(dn, j + 1) - at(dn, j - 1));
                    gx.abs()
                })
                .collect()
        })
        .collect()
}

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() - 1) as f64 * q).round() as usize;
    v[idx]
}

/// Angles (radians, ascending in `[0, 2π)`) of columns crossed by a
/// complete radial edge, with nearby columns merged to their centroid.
pub fn detect_sector_edges(u: &UnrolledPie, cfg: &PieSegConfig) -> Result<Vec<f64>, PieError> {
    let mag = sobel_angle(u);
    let rows = mag.len();
    let cols = u.angles.len();
    let thr = quantile(mag.iter().flatten().copied().collect(), cfg.sobel_mag_quantile);
    let step_deg = 360.0 / cols as f64;
    let tol = (cfg.column_tolerance_deg / step_deg).round() as isize;
    let first = ((rows as f64) * cfg.inner_ignore_frac).floor() as usize;
    let considered = rows - first;
    let need = (cfg.complete_edge_min_span * considered as f64).ceil() as usize;

    let mut is_boundary = vec![false; cols];
    for (j, flag) in is_boundary.iter_mut().enumerate() {
        let hits = mag[first..]
            .iter()
            .filter(|row| (-tol..=tol).any(|d| row[(j as isize + d).rem_euclid(cols as isize) as usize] > thr))
            .count();
        *flag = hits >= need;
    }
    let cols_on: Vec<usize> = (0..cols).filter(|&j| is_boundary[j]).collect();
    if cols_on.is_empty() {
        return Err(PieError::NoBoundaries);
    }
    if cols_on.len() == cols {
        return Err(PieError::NoBoundaries);
    }

    // group columns whose gaps are within the merge distance, circularly
    let merge = (cfg.min_sector_angle / step_deg).ceil() as usize;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &j in &cols_on {
        match groups.last_mut() {
            Some(g) if j - g[g.len() - 1] <= merge => g.push(j),
            _ => groups.push(vec![j]),
        }
    }
    if groups.len() > 1 {
        let wrap_gap = cols_on[0] + cols - cols_on[cols_on.len() - 1];
        if wrap_gap <= merge {
            let head = groups.remove(0);
            groups.last_mut().unwrap().extend(head.into_iter().map(|j| j + cols));
        }
    }
    let mut angles: Vec<f64> = groups
        .iter()
        .map(|g| {
            let mean = g.iter().sum::<usize>() as f64 / g.len() as f64;
            (mean * TAU / cols as f64).rem_euclid(TAU)
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    if angles.len() < 2 {
        return Err(PieError::NoBoundaries);
    }
    Ok(angles)
}

/// Fitted disc and sector boundary angles.
#[derive(Debug, Clone, PartialEq)]
pub struct PieGeometry {
    pub circle: Circle,
    pub boundaries: Vec<f64>,
}

/// Circle of the largest foreground contour, converted from pixel indices
/// to continuous coordinates.
pub fn fit_pie_circle(img: &ChartImage) -> Result<Circle, PieError> {
    let bin = binarize(img);
    if bin.degenerate {
        return Err(PieError::NoPie);
    }
    let clean = morph_clean(&bin.mask);
    let largest = extract_contours(&clean).into_iter().max_by_key(|c| c.area).ok_or(PieError::NoPie)?;
    let c = min_enclosing_circle(&largest);
    Ok(Circle { cx: c.cx + 0.5, cy: c.cy + 0.5, r: c.r + 0.5 })
}

pub fn pie_geometry(img: &ChartImage, cfg: &PieSegConfig) -> Result<PieGeometry, PieError> {
    let circle = fit_pie_circle(img)?;
    let u = unroll_polar(img, &circle, cfg)?;
    let boundaries = detect_sector_edges(&u, cfg)?;
    Ok(PieGeometry { circle, boundaries })
}

/// Sector wedges labeled `S1..Sk` clockwise (image y down) from the first
/// boundary at or after angle 0.
pub fn sector_marks(img: &ChartImage, g: &PieGeometry, cfg: &PieSegConfig) -> Vec<(Region, Point)> {
    let (w, h) = (img.width(), img.height());
    let c = &g.circle;
    let n = g.boundaries.len();
    (0..n)
        .map(|k| {
            let a0 = g.boundaries[k];
            let a1 = if k + 1 < n { g.boundaries[k + 1] } else { g.boundaries[0] + TAU };
            let poly = wedge_polygon((c.cx, c.cy), c.r, a0, a1, cfg.arc_step_deg, (w, h));
            let mid = (a0 + a1) / 2.0;
            let anchor = Point::from_f64(c.cx + 0.6 * c.r * mid.cos() - 0.5, c.cy + 0.6 * c.r * mid.sin() - 0.5, w - 1, h - 1);
            let region = Region::new(ChartKind::Pie, Geometry::Polygon { points: poly }).with_label(format!("S{}", k + 1));
            (region, anchor)
        })
        .collect()
}

pub fn detect_pie(img: &ChartImage, cfg: &PieSegConfig, refine_cfg: &RefineConfig, refiner: &dyn RefinementBackend) -> Result<MarkSet, PieError> {
    let g = pie_geometry(img, cfg)?;
    let mut warnings = Vec::new();
    let marks: Vec<Mark> = sector_marks(img, &g, cfg)
        .into_iter()
        .map(|(region, anchor)| {
            let out = refine_region(img, &region, refine_cfg, refiner);
            warnings.extend(out.warning);
            Mark { region: out.region, anchor, refined: out.refined }
        })
        .collect();
    let mut set = MarkSet::new(img.id(), img.dims(), marks).expect("labels are unique");
    for w in warnings {
        set = set.with_warning(w);
    }
    Ok(set)
}
