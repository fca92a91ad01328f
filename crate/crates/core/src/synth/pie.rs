use std::f64::consts::TAU;

use super::{ChartData, ChartSpec, ElementInfo, GeneratedChart, PieTruth, SynthError};
use crate::geometry::{wedge_polygon, ChartKind, Geometry, Mark, MarkSet, Point, Region};
use crate::raster::Canvas;

/// Smallest sector the generator will paint, in degrees.
pub const MIN_RENDERABLE_DEG: f64 = 2.0;

/// Renders a pie from positive values; ground truth is one wedge polygon per
/// sector, labeled clockwise from the first boundary at or after angle 0.
pub fn gen_pie_chart(spec: &ChartSpec, id: &str) -> Result<GeneratedChart, SynthError> {
    spec.validate()?;
    let ChartData::Pie { categories, values } = &spec.data else {
        return Err(SynthError::InvalidSpec("expected pie data".into()));
    };
    let total: f64 = values.iter().sum();
    if let Some(v) = values.iter().map(|v| v / total * 360.0).find(|&d| d < MIN_RENDERABLE_DEG) {
        return Err(SynthError::SectorTooSmall(v));
    }
    let (w, h) = spec.canvas;
    let radius = (w.min(h) as f64 * 0.36).floor();
    let center = ((w / 2) as f64, (h / 2 + 10) as f64);
    let start = spec.start_angle_deg.to_radians().rem_euclid(TAU);

    let mut bounds = Vec::with_capacity(values.len() + 1);
    let mut acc = 0.0;
    bounds.push(start);
    for v in values {
        acc += v / total * TAU;
        bounds.push(start + acc);
    }

    let mut canvas = Canvas::new(w, h, spec.theme.background());
    let r2 = radius * radius;
    let (x_lo, x_hi) = ((center.0 - radius).floor() as u32, (center.0 + radius).ceil() as u32);
    let (y_lo, y_hi) = ((center.1 - radius).floor() as u32, (center.1 + radius).ceil() as u32);
    for y in y_lo..y_hi.min(h) {
        for x in x_lo..x_hi.min(w) {
            let (dx, dy) = (x as f64 + 0.5 - center.0, y as f64 + 0.5 - center.1);
            if dx * dx + dy * dy > r2 {
                continue;
            }
            let rel = (dy.atan2(dx) - start).rem_euclid(TAU);
            let k = bounds[1..].iter().position(|&b| rel < b - start).unwrap_or(values.len() - 1);
            canvas.put(x as i64, y as i64, spec.palette[k]);
        }
    }
    if spec.style.borders {
        for &b in &bounds[..values.len()] {
            let end = (center.0 + radius * b.cos(), center.1 + radius * b.sin());
            canvas.draw_segment(center, end, 0.5, spec.theme.background());
        }
    }
    let fs = spec.style.font_scale;
    for (i, cat) in categories.iter().enumerate() {
        let mid = (bounds[i] + bounds[i + 1]) / 2.0;
        let (tw, th) = crate::font::text_size(cat, fs);
        let lx = center.0 + radius * 1.18 * mid.cos() - tw as f64 / 2.0;
        let ly = center.1 + radius * 1.18 * mid.sin() - th as f64 / 2.0;
        let lx = lx.clamp(2.0, (w - tw - 2) as f64);
        let ly = ly.clamp(2.0, (h - th - 2) as f64);
        canvas.draw_text(lx as i64, ly as i64, cat, fs, spec.theme.ink());
    }
    if !spec.title.is_empty() {
        let (tw, _) = crate::font::text_size(&spec.title, fs);
        canvas.draw_text((w as i64 - tw as i64) / 2, 6, &spec.title, fs, spec.theme.ink());
    }

    // clockwise order starting from the first boundary in [0, 2π)
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| bounds[a].rem_euclid(TAU).total_cmp(&bounds[b].rem_euclid(TAU)));
    let mut marks = Vec::with_capacity(values.len());
    let mut elements = Vec::with_capacity(values.len());
    for (rank, &k) in order.iter().enumerate() {
        let label = format!("S{}", rank + 1);
        let poly = wedge_polygon(center, radius, bounds[k], bounds[k + 1], 1.0, (w, h));
        let mid = (bounds[k] + bounds[k + 1]) / 2.0;
        let anchor = Point::from_f64(center.0 + 0.6 * radius * mid.cos(), center.1 + 0.6 * radius * mid.sin(), w - 1, h - 1);
        let region = Region::new(ChartKind::Pie, Geometry::Polygon { points: poly }).with_label(label.clone());
        region.validate(crate::geometry::Dims::new(w, h))?;
        marks.push(Mark { region, anchor, refined: false });
        elements.push(ElementInfo { label, category: categories[k].clone(), series: String::new(), value: values[k], color: spec.palette[k] });
    }
    let mut boundaries: Vec<f64> = bounds[..values.len()].iter().map(|b| b.rem_euclid(TAU)).collect();
    boundaries.sort_by(f64::total_cmp);
    let image = canvas.into_image(id)?;
    let truth = MarkSet::new(id, image.dims(), marks)?;
    Ok(GeneratedChart {
        image,
        truth,
        elements,
        notes: Vec::new(),
        pie: Some(PieTruth { center, radius, boundaries }),
        lines: Vec::new(),
        theme: spec.theme,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{Style, Theme};

    fn pie(values: Vec<f64>, start: f64, borders: bool) -> ChartSpec {
        ChartSpec {
            data: ChartData::Pie { categories: (0..values.len()).map(|i| format!("P{i}")).collect(), values },
            theme: Theme::Light,
            palette: vec![[31, 119, 180], [255, 127, 14], [44, 160, 44], [214, 39, 40], [148, 103, 189], [140, 86, 75], [227, 119, 194], [23, 190, 207]],
            style: Style { grid: false, ticks: false, font_scale: 1, borders },
            seed: 0,
            canvas: (500, 500),
            title: String::new(),
            start_angle_deg: start,
        }
    }

    fn sector_degrees(g: &GeneratedChart) -> Vec<f64> {
        let b = &g.pie.as_ref().unwrap().boundaries;
        (0..b.len()).map(|i| ((b[(i + 1) % b.len()] - b[i]).rem_euclid(TAU)).to_degrees()).collect()
    }

    #[test]
    fn shares_become_proportional_angles() {
        let g = gen_pie_chart(&pie(vec![50.0, 30.0, 20.0], 0.0, false), "p").unwrap();
        let mut d = sector_degrees(&g);
        d.sort_by(f64::total_cmp);
        for (got, want) in d.iter().zip([72.0, 108.0, 180.0]) {
            assert!((got - want).abs() < 1e-9);
        }
        let g = gen_pie_chart(&pie(vec![1.0; 8], 10.0, true), "p8").unwrap();
        assert!(sector_degrees(&g).iter().all(|d| (d - 45.0).abs() < 1e-9));
        assert_eq!(g.truth.len(), 8);
    }

    #[test]
    fn painted_wedges_match_polygon_raster() {
        let g = gen_pie_chart(&pie(vec![5.0, 3.0, 2.0, 4.0], 33.0, false), "r").unwrap();
        let dims = g.image.dims();
        for (m, e) in g.truth.marks().iter().zip(&g.elements) {
            let spans = m.region.spans(dims).unwrap();
            let agree = spans.iter_pixels().filter(|p| g.image.rgb(p.x, p.y) == e.color).count() as f64;
            let painted = (0..dims.height)
                .flat_map(|y| (0..dims.width).map(move |x| (x, y)))
                .filter(|&(x, y)| g.image.rgb(x, y) == e.color)
                .count() as f64;
            let union = spans.area() as f64 + painted - agree;
            assert!(agree / union >= 0.99, "{}: {}", m.label(), agree / union);
        }
    }

    #[test]
    fn tiny_share_is_rejected() {
        let err = gen_pie_chart(&pie(vec![1000.0, 1.0], 0.0, false), "t").unwrap_err();
        assert!(matches!(err, SynthError::SectorTooSmall(_)));
    }
}
