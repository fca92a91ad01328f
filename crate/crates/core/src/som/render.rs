use crate::font;
use crate::geometry::{ChartImage, ChartKind, GeometryError, Mark, MarkSet, Rect};
use crate::raster::Canvas;
use crate::vision::{erode, luminance, BinaryImage};

/// High-contrast outline and tag colors, cycled by mark index.
pub const MARK_PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [0, 130, 200],
    [245, 130, 48],
    [60, 180, 75],
    [145, 30, 180],
    [0, 0, 0],
    [240, 50, 230],
    [128, 128, 0],
];

const TAG_PAD: u32 = 2;

fn tag_scale(dims: crate::geometry::Dims) -> u32 {
    if dims.width.min(dims.height) >= 400 {
        2
    } else {
        1
    }
}

/// Tag rectangles, one per mark: centered on the anchor, clamped to the
/// image, and nudged down by the tag height while they overlap an earlier tag.
pub fn layout_tags(marks: &MarkSet) -> Vec<Rect> {
    let dims = marks.dims();
    let scale = tag_scale(dims);
    let mut placed: Vec<Rect> = Vec::with_capacity(marks.len());
    for m in marks.marks() {
        let (tw, th) = font::text_size(m.label(), scale);
        let (w, h) = ((tw + 2 * TAG_PAD).min(dims.width), (th + 2 * TAG_PAD).min(dims.height));
        let x0 = (m.anchor.x as i64 - w as i64 / 2).clamp(0, (dims.width - w) as i64) as u32;
        let mut y0 = (m.anchor.y as i64 - h as i64 / 2).clamp(0, (dims.height - h) as i64) as u32;
        for _ in 0..marks.len() {
            let r = Rect::new(x0, y0, x0 + w, y0 + h);
            if !placed.iter().any(|p| p.intersects(&r)) {
                break;
            }
            if y0 + 2 * h > dims.height {
                break;
            }
            y0 += h;
        }
        placed.push(Rect::new(x0, y0, x0 + w, y0 + h));
    }
    placed
}

/// Draws a 2-px outline of the region's inner border.
fn outline(canvas: &mut Canvas, m: &Mark, dims: crate::geometry::Dims, rgb: [u8; 3]) -> Result<(), GeometryError> {
    let spans = m.region.spans(dims)?;
    let Some(bb) = spans.bbox() else { return Ok(()) };
    let inside = BinaryImage::from_fn(bb.width(), bb.height(), |x, y| spans.contains(crate::geometry::Point::new(x + bb.x0, y + bb.y0)));
    // erosion treats outside-of-window neighbors as absent, so pad by one
    let padded = BinaryImage::from_fn(bb.width() + 2, bb.height() + 2, |x, y| x >= 1 && y >= 1 && x <= bb.width() && y <= bb.height() && inside.get(x - 1, y - 1));
    let core = erode(&erode(&padded));
    for y in 0..bb.height() {
        for x in 0..bb.width() {
            if inside.get(x, y) && !core.get(x + 1, y + 1) {
                canvas.put((x + bb.x0) as i64, (y + bb.y0) as i64, rgb);
            }
        }
    }
    Ok(())
}

/// Overlays outlines (bars, sectors) or anchor dots (line segments) and a
/// filled label tag per mark. Output has the input's dimensions.
pub fn render_marks(img: &ChartImage, marks: &MarkSet) -> Result<ChartImage, GeometryError> {
    let mut canvas = Canvas::from_image(img);
    let dims = img.dims();
    for (i, m) in marks.marks().iter().enumerate() {
        let color = MARK_PALETTE[i % MARK_PALETTE.len()];
        if m.region.kind == ChartKind::Line {
            let (x, y) = (m.anchor.x as i64, m.anchor.y as i64);
            for dy in -2..=2 {
                for dx in -2..=2 {
                    canvas.put(x + dx, y + dy, color);
                }
            }
        } else {
            outline(&mut canvas, m, dims, color)?;
        }
    }
    let scale = tag_scale(dims);
    for (i, (m, tag)) in marks.marks().iter().zip(layout_tags(marks)).enumerate() {
        let color = MARK_PALETTE[i % MARK_PALETTE.len()];
        canvas.fill_rect(tag, color);
        let ink = if luminance(color) > 140 { [0, 0, 0] } else { [255, 255, 255] };
        canvas.draw_text((tag.x0 + TAG_PAD) as i64, (tag.y0 + TAG_PAD) as i64, m.label(), scale, ink);
    }
    canvas.into_image(img.id())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Dims, Point, Region};

    fn bar_marks(n: u32) -> MarkSet {
        let marks = (0..n)
            .map(|i| {
                let r = Region::boxed(ChartKind::Bar, Rect::new(40 + 80 * i, 100, 90 + 80 * i, 280)).with_label(format!("B{}", i + 1));
                let anchor = r.bbox().unwrap().center();
                Mark { region: r, anchor, refined: true }
            })
            .collect();
        MarkSet::new("c", Dims::new(300, 300), marks).unwrap()
    }

    #[test]
    fn tags_follow_region_order() {
        let m = bar_marks(3);
        let tags = layout_tags(&m);
        assert_eq!(tags.len(), 3);
        assert!(tags.windows(2).all(|w| w[0].x0 < w[1].x0));
        for (t, mark) in tags.iter().zip(m.marks()) {
            assert!(mark.region.bbox().unwrap().contains(t.center()));
        }
    }

    #[test]
    fn rendered_tags_carry_palette_colors() {
        let img = ChartImage::filled("c", 300, 300, [255, 255, 255]).unwrap();
        let m = bar_marks(3);
        let out = render_marks(&img, &m).unwrap();
        assert_eq!(out.dims(), img.dims());
        for (i, t) in layout_tags(&m).iter().enumerate() {
            assert_eq!(out.rgb(t.x0, t.y0), MARK_PALETTE[i]);
        }
        // outline on the bar border, interior untouched
        assert_eq!(out.rgb(40, 150), MARK_PALETTE[0]);
        assert_eq!(out.rgb(41, 150), MARK_PALETTE[0]);
        assert_eq!(out.rgb(43, 150), [255, 255, 255]);
    }

    #[test]
    fn empty_set_leaves_image_unchanged() {
        let img = ChartImage::filled("c", 64, 64, [10, 200, 30]).unwrap();
        let out = render_marks(&img, &MarkSet::empty("c", img.dims())).unwrap();
        assert_eq!(out.pixels(), img.pixels());
    }

    #[test]
    fn overlapping_tags_are_nudged_down() {
        let marks = (0..2)
            .map(|i| Mark {
                region: Region::boxed(ChartKind::Bar, Rect::new(100, 100, 140, 200)).with_label(format!("B{}", i + 1)),
                anchor: Point::new(120, 150),
                refined: false,
            })
            .collect();
        let tags = layout_tags(&MarkSet::new("c", Dims::new(300, 300), marks).unwrap());
        assert!(!tags[0].intersects(&tags[1]));
        assert_eq!(tags[1].y0, tags[0].y1);
    }
}
