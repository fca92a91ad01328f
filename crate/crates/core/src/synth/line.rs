use super::bar::axis_max;
use super::{ChartData, ChartSpec, ElementInfo, Frame, GeneratedChart, LineTruth, SynthError};
use crate::geometry::{ChartKind, Mark, MarkSet, Point, Rect, Region};
use crate::raster::Canvas;

/// Stroke half-width; strokes are 2 px wide.
const HALF_STROKE: f64 = 1.0;

/// Renders polylines with a 2-px stroke. Vertices are snapped to pixel
/// centers so the ground-truth vertex pixels are exact; the truth mark set
/// holds one 1×1 box per vertex labeled `V{series}-{index}`.
pub fn gen_line_chart(spec: &ChartSpec, id: &str) -> Result<GeneratedChart, SynthError> {
    spec.validate()?;
    let ChartData::Lines { series } = &spec.data else {
        return Err(SynthError::InvalidSpec("expected line data".into()));
    };
    let (w, h) = spec.canvas;
    let frame = Frame::new(spec.canvas, spec.style.font_scale);
    let plot = frame.plot;
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if xmax <= xmin {
        return Err(SynthError::InvalidSpec("line x values must span a range".into()));
    }
    let ymax = axis_max(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).fold(0.0, f64::max));

    let mut canvas = Canvas::new(w, h, spec.theme.background());
    frame.draw(&mut canvas, spec, true, ymax);
    let fs = spec.style.font_scale;
    let first = &series[0].points;
    for (i, (x, _)) in first.iter().enumerate() {
        if i % 2 == 1 {
            continue;
        }
        let label = format!("{}", x.round() as i64);
        let px = plot.x0 as f64 + (x - xmin) / (xmax - xmin) * (plot.width() - 1) as f64;
        let (tw, th) = crate::font::text_size(&label, fs);
        let y = (plot.y1 as i64 + if spec.style.ticks { 8 } else { 6 }).min(h as i64 - th as i64 - 1);
        canvas.draw_text(px as i64 - tw as i64 / 2, y, &label, fs, spec.theme.ink());
    }

    let mut lines = Vec::with_capacity(series.len());
    let mut marks = Vec::new();
    let mut elements = Vec::new();
    for (si, s) in series.iter().enumerate() {
        let mut pts = s.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = spec.palette[si];
        let vertices: Vec<Point> = pts
            .iter()
            .map(|(x, y)| {
                let px = plot.x0 as f64 + (x - xmin) / (xmax - xmin) * (plot.width() - 1) as f64;
                let py = plot.y1 as f64 - 1.0 - y / ymax * (plot.height() - 1) as f64;
                Point::from_f64(px, py, w - 1, h - 1)
            })
            .collect();
        let polyline: Vec<(f64, f64)> = vertices.iter().map(|p| (p.x as f64 + 0.5, p.y as f64 + 0.5)).collect();
        for seg in polyline.windows(2) {
            canvas.draw_segment(seg[0], seg[1], HALF_STROKE, color);
        }
        for (k, (v, (_, value))) in vertices.iter().zip(&pts).enumerate() {
            let label = format!("V{}-{}", si + 1, k + 1);
            let region = Region::boxed(ChartKind::Line, Rect::new(v.x, v.y, v.x + 1, v.y + 1)).with_label(label.clone());
            marks.push(Mark { region, anchor: *v, refined: false });
            elements.push(ElementInfo { label, category: format!("{}", pts[k].0), series: s.name.clone(), value: *value, color });
        }
        lines.push(LineTruth { series: s.name.clone(), color, vertices, polyline });
    }
    let image = canvas.into_image(id)?;
    let truth = MarkSet::new(id, image.dims(), marks)?;
    Ok(GeneratedChart { image, truth, elements, notes: Vec::new(), pie: None, lines, theme: spec.theme })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{Style, Theme, XySeries};

    fn spec(series: Vec<Vec<(f64, f64)>>, theme: Theme) -> ChartSpec {
        ChartSpec {
            data: ChartData::Lines {
                series: series.into_iter().enumerate().map(|(i, points)| XySeries { name: format!("L{i}"), points }).collect(),
            },
            theme,
            palette: vec![[220, 40, 40], [30, 90, 220]],
            style: Style::default(),
            seed: 0,
            canvas: (800, 500),
            title: "T".into(),
            start_angle_deg: 0.0,
        }
    }

    #[test]
    fn identity_line_vertices_are_colinear() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 10.0, i as f64 * 10.0)).collect();
        let g = gen_line_chart(&spec(vec![pts], Theme::Light), "l").unwrap();
        let v = &g.lines[0].vertices;
        let (a, b) = (v[0], v[v.len() - 1]);
        for p in v {
            // distance from the chord, within rounding
            let num = ((b.y as f64 - a.y as f64) * (p.x as f64 - a.x as f64) - (b.x as f64 - a.x as f64) * (p.y as f64 - a.y as f64)).abs();
            let den = ((b.x as f64 - a.x as f64).powi(2) + (b.y as f64 - a.y as f64).powi(2)).sqrt();
            assert!(num / den <= 1.0);
        }
    }

    #[test]
    fn vertices_are_painted_in_series_color() {
        let g = gen_line_chart(&spec(vec![vec![(0.0, 10.0), (1.0, 50.0), (2.0, 30.0)], vec![(0.0, 70.0), (2.0, 20.0)]], Theme::Light), "l").unwrap();
        for l in &g.lines {
            for v in &l.vertices {
                let c = g.image.rgb(v.x, v.y);
                assert!(c == l.color || g.lines.iter().any(|o| o.color == c));
            }
        }
    }

    #[test]
    fn theme_does_not_move_geometry() {
        let pts = vec![vec![(0.0, 10.0), (1.0, 50.0), (2.0, 30.0)]];
        let light = gen_line_chart(&spec(pts.clone(), Theme::Light), "l").unwrap();
        let dark = gen_line_chart(&spec(pts, Theme::Dark), "l").unwrap();
        assert_eq!(light.lines, dark.lines);
        assert_eq!(light.truth, dark.truth);
    }
}
