use super::{BarMode, ChartData, ChartSpec, ElementInfo, Frame, GeneratedChart, Orientation, SynthError};
use crate::geometry::{ChartKind, Mark, MarkSet, Rect, Region};
use crate::raster::Canvas;

/// Rounds the axis maximum up to a multiple of 10 above 110% of the data.
pub(crate) fn axis_max(vmax: f64) -> f64 {
    ((vmax * 1.1) / 10.0).ceil().max(1.0) * 10.0
}

/// Renders simple, grouped or stacked bars; ground truth is the exact
/// painted rectangle of every non-empty bar.
pub fn gen_bar_chart(spec: &ChartSpec, id: &str) -> Result<GeneratedChart, SynthError> {
    spec.validate()?;
    let ChartData::Bars { categories, series, orientation, mode } = &spec.data else {
        return Err(SynthError::InvalidSpec("expected bar data".into()));
    };
    let (w, h) = spec.canvas;
    let frame = Frame::new(spec.canvas, spec.style.font_scale);
    let plot = frame.plot;
    let vertical = *orientation == Orientation::Vertical;
    let n = categories.len();
    let per_slot = if *mode == BarMode::Grouped { series.len() } else { 1 };

    let vmax = match mode {
        BarMode::Stacked => (0..n).map(|i| series.iter().map(|s| s.values[i]).sum::<f64>()).fold(0.0, f64::max),
        _ => series.iter().flat_map(|s| s.values.iter().copied()).fold(0.0, f64::max),
    };
    let amax = axis_max(vmax);
    let (cat_len, val_len) = if vertical { (plot.width(), plot.height()) } else { (plot.height(), plot.width()) };
    let slot = cat_len as f64 / n as f64;
    let group = slot * 0.7;
    let bar = group / per_slot as f64;

    let mut canvas = Canvas::new(w, h, spec.theme.background());
    frame.draw(&mut canvas, spec, vertical, amax);

    let mut bars: Vec<(Rect, ElementInfo)> = Vec::new();
    let mut notes = Vec::new();
    for (ci, cat) in categories.iter().enumerate() {
        let g0 = slot * ci as f64 + (slot - group) / 2.0;
        let mut stacked = 0.0;
        for (si, s) in series.iter().enumerate() {
            let lane = if *mode == BarMode::Grouped { si } else { 0 };
            let c0 = (g0 + bar * lane as f64).round() as u32;
            let c1 = (g0 + bar * (lane + 1) as f64).round() as u32;
            if c1 - c0 < 4 {
                return Err(SynthError::TooManyBars(c1 - c0));
            }
            let v = s.values[ci];
            let base = if *mode == BarMode::Stacked { stacked } else { 0.0 };
            stacked += v;
            let v0 = (base / amax * val_len as f64).round() as u32;
            let v1 = ((base + v) / amax * val_len as f64).round() as u32;
            if v1 <= v0 {
                notes.push(format!("bar {cat}/{} has zero extent and was omitted from ground truth", s.name));
                continue;
            }
            let rect = if vertical {
                Rect::new(plot.x0 + c0, plot.y1 - v1, plot.x0 + c1, plot.y1 - v0)
            } else {
                Rect::new(plot.x0 + v0, plot.y0 + c0, plot.x0 + v1, plot.y0 + c1)
            };
            let color = spec.palette[si];
            canvas.fill_rect(rect, color);
            bars.push((rect, ElementInfo { label: String::new(), category: cat.clone(), series: s.name.clone(), value: v, color }));
        }
        let fs = spec.style.font_scale;
        let (tw, th) = crate::font::text_size(cat, fs);
        let mid = slot * (ci as f64 + 0.5);
        if vertical {
            let x = plot.x0 as i64 + mid as i64 - tw as i64 / 2;
            let y = plot.y1 as i64 + if spec.style.ticks { 8 + th as i64 + 4 } else { 7 };
            canvas.draw_text(x, y.min(h as i64 - th as i64 - 1), cat, fs, spec.theme.ink());
        } else {
            let y = plot.y0 as i64 + mid as i64 - th as i64 / 2;
            canvas.draw_text(plot.x0 as i64 - 8 - tw as i64, y, cat, fs, spec.theme.ink());
        }
    }

    bars.sort_by_key(|(r, _)| (r.x0, r.y0));
    let mut marks = Vec::with_capacity(bars.len());
    let mut elements = Vec::with_capacity(bars.len());
    for (i, (rect, mut info)) in bars.into_iter().enumerate() {
        let label = format!("B{}", i + 1);
        info.label = label.clone();
        marks.push(Mark { region: Region::boxed(ChartKind::Bar, rect).with_label(label), anchor: rect.center(), refined: false });
        elements.push(info);
    }
    let image = canvas.into_image(id)?;
    let truth = MarkSet::new(id, image.dims(), marks)?;
    Ok(GeneratedChart { image, truth, elements, notes, pie: None, lines: Vec::new(), theme: spec.theme })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{Series, Style, Theme};
    use crate::geometry::Geometry;

    fn spec(values: Vec<Vec<f64>>, mode: BarMode, orientation: Orientation) -> ChartSpec {
        let n = values[0].len();
        ChartSpec {
            data: ChartData::Bars {
                categories: (0..n).map(|i| format!("C{i}")).collect(),
                series: values.into_iter().enumerate().map(|(i, v)| Series { name: format!("S{i}"), values: v }).collect(),
                orientation,
                mode,
            },
            theme: Theme::Light,
            palette: vec![[31, 119, 180], [214, 39, 40], [44, 160, 44]],
            style: Style { grid: true, ticks: true, font_scale: 1, borders: false },
            seed: 0,
            canvas: (800, 500),
            title: "Demo".into(),
            start_angle_deg: 0.0,
        }
    }

    /// Re-scans the image: every pixel painted in a bar color must belong to
    /// exactly the gt box of that color, and every gt box is fully painted.
    fn assert_painted_matches(g: &GeneratedChart) {
        let img = &g.image;
        for (m, e) in g.truth.marks().iter().zip(&g.elements) {
            let Geometry::Box(r) = m.region.geometry else { panic!() };
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    assert_eq!(img.rgb(x, y), e.color);
                }
            }
        }
        let colors: Vec<[u8; 3]> = g.elements.iter().map(|e| e.color).collect();
        for y in 0..img.height() {
            for x in 0..img.width() {
                let c = img.rgb(x, y);
                if colors.contains(&c) {
                    let inside = g.truth.marks().iter().zip(&g.elements).any(|(m, e)| {
                        let Geometry::Box(r) = m.region.geometry else { panic!() };
                        e.color == c && r.contains(crate::geometry::Point::new(x, y))
                    });
                    assert!(inside, "stray bar color at {x},{y}");
                }
            }
        }
    }

    #[test]
    fn six_bars_paint_exactly_their_boxes() {
        let g = gen_bar_chart(&spec(vec![vec![10.0, 40.0, 25.0, 60.0, 5.0, 33.0]], BarMode::Simple, Orientation::Vertical), "b").unwrap();
        assert_eq!(g.truth.len(), 6);
        assert_painted_matches(&g);
    }

    #[test]
    fn stacked_segments_are_adjacent() {
        let g = gen_bar_chart(&spec(vec![vec![10.0, 20.0, 30.0], vec![15.0, 5.0, 25.0]], BarMode::Stacked, Orientation::Vertical), "s").unwrap();
        assert_eq!(g.truth.len(), 6);
        assert_painted_matches(&g);
        let boxes: Vec<Rect> = g.truth.regions().map(|r| r.bbox().unwrap()).collect();
        for pair in boxes.chunks(2) {
            // same column, one directly above the other
            assert_eq!((pair[0].x0, pair[0].x1), (pair[1].x0, pair[1].x1));
            assert!(pair[0].y1 == pair[1].y0 || pair[1].y1 == pair[0].y0);
        }
    }

    #[test]
    fn horizontal_and_grouped_layouts() {
        let g = gen_bar_chart(&spec(vec![vec![10.0, 20.0], vec![30.0, 40.0], vec![5.0, 50.0]], BarMode::Grouped, Orientation::Horizontal), "h").unwrap();
        assert_eq!(g.truth.len(), 6);
        assert_painted_matches(&g);
    }

    #[test]
    fn zero_value_is_omitted_with_note() {
        let g = gen_bar_chart(&spec(vec![vec![10.0, 0.0, 30.0]], BarMode::Simple, Orientation::Vertical), "z").unwrap();
        assert_eq!(g.truth.len(), 2);
        assert_eq!(g.notes.len(), 1);
    }

    #[test]
    fn too_many_bars_is_an_error() {
        let err = gen_bar_chart(&spec(vec![vec![10.0; 200]], BarMode::Simple, Orientation::Vertical), "x").unwrap_err();
        assert!(matches!(err, SynthError::TooManyBars(_)));
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(vec![vec![12.0, 40.0, 25.0]], BarMode::Simple, Orientation::Vertical);
        let a = gen_bar_chart(&s, "d").unwrap();
        let b = gen_bar_chart(&s, "d").unwrap();
        assert_eq!(a.image.encode_png().unwrap(), b.image.encode_png().unwrap());
        assert_eq!(a.truth, b.truth);
    }
}
