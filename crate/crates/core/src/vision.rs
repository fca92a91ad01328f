//! Binarization, morphology and contour statistics shared by the bar and pie
//! segmenters.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{ChartImage, Dims, Point, Rect, Span, SpanSet};

/// One-bit raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; width as usize * height as usize] }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize);
        Self { width, height, bits }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut b = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                b.bits[(y * width + x) as usize] = f(x, y);
            }
        }
        b
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

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[(y * self.width + x) as usize] = v;
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }
}

/// Result of [`binarize`].
#[derive(Debug, Clone)]
pub struct Binarized {
    pub mask: BinaryImage,
    pub dark_background: bool,
    /// Set when both channels had zero variance and no threshold exists.
    pub degenerate: bool,
}

#[inline]
pub fn luminance(rgb: [u8; 3]) -> u8 {
    ((299 * rgb[0] as u32 + 587 * rgb[1] as u32 + 114 * rgb[2] as u32 + 500) / 1000) as u8
}

/// Value channel of HSV.
#[inline]
pub fn hsv_value(rgb: [u8; 3]) -> u8 {
    rgb[0].max(rgb[1]).max(rgb[2])
}

/// Otsu threshold over a 256-bin histogram: values `<= t` form the low class.
/// Returns `None` when every sample has the same value. Ties across a flat
/// optimum resolve to the middle of the optimal range.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 || hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let sum_all: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();
    let mut w0 = 0f64;
    let mut sum0 = 0f64;
    let mut best = -1f64;
    let (mut first, mut last) = (0usize, 0usize);
    for (t, &count) in hist.iter().enumerate().take(255) {
        w0 += count as f64;
        sum0 += t as f64 * count as f64;
        let w1 = total as f64 - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        let tol = 1e-9 * between.abs().max(1.0);
        if between > best + tol {
            best = between;
            first = t;
            last = t;
        } else if (between - best).abs() <= tol {
            last = t;
        }
    }
    Some(((first + last) / 2) as u8)
}

/// Mean luminance of the two-pixel border ring is below 128.
pub fn detect_dark_background(img: &ChartImage) -> bool {
    let (w, h) = (img.width(), img.height());
    let mut sum = 0u64;
    let mut n = 0u64;
    for y in 0..h {
        for x in 0..w {
            if x < 2 || y < 2 || x + 2 >= w || y + 2 >= h {
                sum += luminance(img.rgb(x, y)) as u64;
                n += 1;
            }
        }
    }
    (sum as f64 / n as f64) < 128.0
}

/// Otsu on grayscale and on HSV value, fused with a logical OR. On light
/// backgrounds the dark class is foreground; on dark backgrounds each
/// channel's result is inverted so the bright class is foreground.
pub fn binarize(img: &ChartImage) -> Binarized {
    let (w, h) = (img.width(), img.height());
    let n = w as usize * h as usize;
    let mut gray = Vec::with_capacity(n);
    let mut val = Vec::with_capacity(n);
    let mut hg = [0u64; 256];
    let mut hv = [0u64; 256];
    for px in img.pixels().chunks_exact(3) {
        let rgb = [px[0], px[1], px[2]];
        let g = luminance(rgb);
        let v = hsv_value(rgb);
        hg[g as usize] += 1;
        hv[v as usize] += 1;
        gray.push(g);
        val.push(v);
    }
    let dark = detect_dark_background(img);
    let tg = otsu_threshold(&hg);
    let tv = otsu_threshold(&hv);
    let fg = |v: u8, t: Option<u8>| match t {
        None => false,
        Some(t) if dark => v > t,
        Some(t) => v <= t,
    };
    let bits = gray.iter().zip(&val).map(|(&g, &v)| fg(g, tg) || fg(v, tv)).collect();
    Binarized { mask: BinaryImage::from_bits(w, h, bits), dark_background: dark, degenerate: tg.is_none() && tv.is_none() }
}

/// 3×3 erosion; out-of-image neighbors are ignored.
pub fn erode(b: &BinaryImage) -> BinaryImage {
    morph3(b, true)
}

/// 3×3 dilation; out-of-image neighbors are ignored.
pub fn dilate(b: &BinaryImage) -> BinaryImage {
    morph3(b, false)
}

fn morph3(b: &BinaryImage, erode: bool) -> BinaryImage {
    let (w, h) = (b.width as i64, b.height as i64);
    let pass = |src: &[bool], dx: i64, dy: i64| -> Vec<bool> {
        let mut out = vec![false; src.len()];
        for y in 0..h {
            for x in 0..w {
                let mut acc = erode;
                for k in -1..=1 {
                    let (nx, ny) = (x + k * dx, y + k * dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let v = src[(ny * w + nx) as usize];
                    if erode {
                        acc &= v;
                    } else {
                        acc |= v;
                    }
                }
                out[(y * w + x) as usize] = acc;
            }
        }
        out
    };
    let rows = pass(&b.bits, 1, 0);
    BinaryImage { width: b.width, height: b.height, bits: pass(&rows, 0, 1) }
}

pub fn opening(b: &BinaryImage) -> BinaryImage {
    dilate(&erode(b))
}

pub fn closing(b: &BinaryImage) -> BinaryImage {
    erode(&dilate(b))
}

/// One opening followed by one closing with a 3×3 square.
pub fn morph_clean(b: &BinaryImage) -> BinaryImage {
    closing(&opening(b))
}

/// External boundary and shape statistics of one 8-connected component.
#[derive(Debug, Clone)]
pub struct Contour {
    /// Boundary pixels in tracing order; the polygon closes implicitly.
    pub boundary: Vec<Point>,
    /// Pixel count.
    pub area: u64,
    /// Pixel count over the area of the convex hull of the pixel squares.
    pub solidity: f64,
    pub bbox: Rect,
    /// Member pixels.
    pub pixels: SpanSet,
}

const DIRS: [(i64, i64); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

/// Labels 8-connected foreground components; label 0 is background and
/// labels follow raster order of each component's first pixel.
pub fn label_components(b: &BinaryImage) -> (Vec<u32>, u32) {
    let (w, h) = (b.width as i64, b.height as i64);
    let mut labels = vec![0u32; b.bits.len()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..b.bits.len() {
        if !b.bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i as i64 % w, i as i64 / w);
            for (dx, dy) in DIRS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if b.bits[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    (labels, next)
}

/// External contours of all 8-connected components, ordered by the
/// (top, left) corner of their bounding boxes.
pub fn extract_contours(b: &BinaryImage) -> Vec<Contour> {
    let (labels, count) = label_components(b);
    if count == 0 {
        return Vec::new();
    }
    let w = b.width as usize;
    let mut spans: Vec<Vec<Span>> = vec![Vec::new(); count as usize];
    let mut starts: Vec<Option<Point>> = vec![None; count as usize];
    for (y, row) in labels.chunks_exact(w).enumerate() {
        let mut x = 0;
        while x < w {
            let l = row[x];
            if l == 0 {
                x += 1;
                continue;
            }
            let x0 = x;
            while x < w && row[x] == l {
                x += 1;
            }
            let k = (l - 1) as usize;
            starts[k].get_or_insert(Point::new(x0 as u32, y as u32));
            spans[k].push(Span { y: y as u32, x0: x0 as u32, x1: x as u32 });
        }
    }
    let mut contours: Vec<Contour> = spans
        .into_iter()
        .zip(starts)
        .enumerate()
        .map(|(k, (sp, start))| {
            let label = k as u32 + 1;
            let pixels = SpanSet::from_spans(sp);
            let inside = |x: i64, y: i64| {
                x >= 0 && y >= 0 && x < b.width as i64 && y < b.height as i64 && labels[(y as usize) * w + x as usize] == label
            };
            let boundary = trace_boundary(start.expect("component has pixels"), inside, pixels.area());
            contour_from_parts(boundary, pixels)
        })
        .collect();
    contours.sort_by_key(|c| (c.bbox.y0, c.bbox.x0));
    contours
}

/// Builds contour statistics from a boundary and the member pixels.
pub fn contour_from_parts(boundary: Vec<Point>, pixels: SpanSet) -> Contour {
    let area = pixels.area();
    let bbox = pixels.bbox().unwrap_or(Rect::new(0, 0, 0, 0));
    let hull_area = pixel_hull_area(&boundary);
    let solidity = if hull_area > 0.0 { (area as f64 / hull_area).min(1.0) } else { 1.0 };
    Contour { boundary, area, solidity, bbox, pixels }
}

/// Moore-neighbor tracing with Jacob's stopping criterion. `start` must be
/// the first component pixel in raster order.
fn trace_boundary(start: Point, inside: impl Fn(i64, i64) -> bool, area: u64) -> Vec<Point> {
    let s = (start.x as i64, start.y as i64);
    let mut boundary = vec![start];
    let mut cur = s;
    let mut back = 0usize; // west of the first pixel is background
    let mut first_move: Option<usize> = None;
    let limit = 4 * area as usize + 16;
    for _ in 0..limit {
        let mut found = None;
        for i in 1..=8 {
            let d = (back + i) % 8;
            let p = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
            if inside(p.0, p.1) {
                found = Some((d, p));
                break;
            }
        }
        let Some((d, p)) = found else { break };
        if cur == s {
            match first_move {
                Some(fm) if fm == d => break,
                None => first_move = Some(d),
                _ => {}
            }
        }
        let prev = (cur.0 + DIRS[(d + 7) % 8].0, cur.1 + DIRS[(d + 7) % 8].1);
        let rel = (prev.0 - p.0, prev.1 - p.1);
        back = DIRS.iter().position(|&q| q == rel).expect("backtrack pixel is a neighbor");
        cur = p;
        boundary.push(Point::new(p.0 as u32, p.1 as u32));
    }
    if boundary.len() > 1 && boundary.last() == boundary.first() {
        boundary.pop();
    }
    boundary
}

/// Convex hull (monotone chain) of integer points, counter-clockwise in a
/// y-up frame, without collinear points.
pub fn convex_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn polygon_area(poly: &[(i64, i64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let twice: i64 = (0..poly.len())
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    twice.abs() as f64 / 2.0
}

/// Area of the convex hull of the unit squares of the given pixels.
pub fn pixel_hull_area(pixels: &[Point]) -> f64 {
    let corners: Vec<(i64, i64)> = pixels
        .iter()
        .flat_map(|p| {
            let (x, y) = (p.x as i64, p.y as i64);
            [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)]
        })
        .collect();
    polygon_area(&convex_hull(&corners))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    fn contains(&self, p: (f64, f64)) -> bool {
        ((p.0 - self.cx).powi(2) + (p.1 - self.cy).powi(2)).sqrt() <= self.r + 1e-7 * self.r.max(1.0)
    }

    fn from_two(a: (f64, f64), b: (f64, f64)) -> Circle {
        let cx = (a.0 + b.0) / 2.0;
        let cy = (a.1 + b.1) / 2.0;
        Circle { cx, cy, r: ((a.0 - cx).powi(2) + (a.1 - cy).powi(2)).sqrt() }
    }

    fn from_three(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Circle {
        let d = 2.0 * (a.0 * (b.1 - c.1) + b.0 * (c.1 - a.1) + c.0 * (a.1 - b.1));
        if d.abs() < 1e-12 {
            // collinear: the widest pair spans the others
            return [Circle::from_two(a, b), Circle::from_two(a, c), Circle::from_two(b, c)]
                .into_iter()
                .max_by(|x, y| x.r.total_cmp(&y.r))
                .unwrap();
        }
        let sa = a.0 * a.0 + a.1 * a.1;
        let sb = b.0 * b.0 + b.1 * b.1;
        let sc = c.0 * c.0 + c.1 * c.1;
        let cx = (sa * (b.1 - c.1) + sb * (c.1 - a.1) + sc * (a.1 - b.1)) / d;
        let cy = (sa * (c.0 - b.0) + sb * (a.0 - c.0) + sc * (b.0 - a.0)) / d;
        Circle { cx, cy, r: ((a.0 - cx).powi(2) + (a.1 - cy).powi(2)).sqrt() }
    }
}

/// Smallest circle enclosing all points (Welzl, iterative form over a
/// fixed-seed shuffle so results are reproducible).
pub fn min_enclosing_circle_points(points: &[(f64, f64)]) -> Option<Circle> {
    let mut pts = points.to_vec();
    if pts.is_empty() {
        return None;
    }
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let mut c = Circle { cx: pts[0].0, cy: pts[0].1, r: 0.0 };
    for i in 1..pts.len() {
        if c.contains(pts[i]) {
            continue;
        }
        c = Circle { cx: pts[i].0, cy: pts[i].1, r: 0.0 };
        for j in 0..i {
            if c.contains(pts[j]) {
                continue;
            }
            c = Circle::from_two(pts[i], pts[j]);
            for k in 0..j {
                if !c.contains(pts[k]) {
                    c = Circle::from_three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    Some(c)
}

/// Minimum enclosing circle of a contour's boundary vertices.
pub fn min_enclosing_circle(c: &Contour) -> Circle {
    let pts: Vec<(f64, f64)> = c.boundary.iter().map(|p| (p.x as f64, p.y as f64)).collect();
    min_enclosing_circle_points(&pts).unwrap_or(Circle { cx: 0.0, cy: 0.0, r: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img_from_fn(w: u32, h: u32, f: impl Fn(u32, u32) -> [u8; 3]) -> ChartImage {
        let mut px = Vec::new();
        for y in 0..h {
            for x in 0..w {
                px.extend_from_slice(&f(x, y));
            }
        }
        ChartImage::new("t", w, h, px).unwrap()
    }

    #[test]
    fn bimodal_split_puts_bright_half_in_foreground() {
        let img = img_from_fn(32, 32, |x, _| if x < 16 { [0; 3] } else { [255; 3] });
        let mut hist = [0u64; 256];
        hist[0] = 512;
        hist[255] = 512;
        let t = otsu_threshold(&hist).unwrap();
        assert!(t > 0 && t < 255);
        let b = binarize(&img);
        assert!(b.dark_background);
        for y in 0..32 {
            for x in 0..32 {
                assert_eq!(b.mask.get(x, y), x >= 16);
            }
        }
    }

    #[test]
    fn white_bars_on_black_are_foreground() {
        let bar = |x: u32, y: u32| (8..14).contains(&x) && y >= 10 || (20..26).contains(&x) && y >= 18;
        let img = img_from_fn(40, 40, |x, y| if bar(x, y) && y < 38 { [240; 3] } else { [10; 3] });
        let b = binarize(&img);
        assert!(b.dark_background);
        assert!(b.mask.get(10, 20) && b.mask.get(22, 30));
        assert!(!b.mask.get(2, 2) && !b.mask.get(30, 5));
    }

    #[test]
    fn constant_image_is_degenerate() {
        let img = ChartImage::filled("g", 20, 20, [128; 3]).unwrap();
        let b = binarize(&img);
        assert!(b.degenerate);
        assert_eq!(b.mask.count_ones(), 0);
    }

    #[test]
    fn border_detector() {
        assert!(!detect_dark_background(&ChartImage::filled("w", 20, 20, [255; 3]).unwrap()));
        assert!(detect_dark_background(&ChartImage::filled("b", 20, 20, [0; 3]).unwrap()));
    }

    #[test]
    fn speckle_removed_square_kept_hole_filled() {
        let speck = BinaryImage::from_fn(20, 20, |x, y| x == 10 && y == 10);
        assert_eq!(morph_clean(&speck).count_ones(), 0);

        let square = BinaryImage::from_fn(80, 80, |x, y| (10..60).contains(&x) && (10..60).contains(&y));
        assert_eq!(morph_clean(&square), square);

        let holed = BinaryImage::from_fn(20, 20, |x, y| (5..15).contains(&x) && (5..15).contains(&y) && !(x == 9 && y == 9));
        let cleaned = morph_clean(&holed);
        assert!(cleaned.get(9, 9));
        assert_eq!(cleaned.count_ones(), 100);
    }

    #[test]
    fn hole_fill_by_hand_on_5x5() {
        // ring of 8 around (2,2): dilation covers the grid, erosion with
        // outside ignored keeps all of it
        let ring = BinaryImage::from_fn(5, 5, |x, y| (1..4).contains(&x) && (1..4).contains(&y) && !(x == 2 && y == 2));
        let closed = closing(&ring);
        assert!(closed.get(2, 2));
        assert_eq!(closed.count_ones(), 25);
    }

    #[test]
    fn contours_of_rectangles_and_c_shape() {
        let two = BinaryImage::from_fn(40, 30, |x, y| ((2..10).contains(&x) && (3..9).contains(&y)) || ((20..30).contains(&x) && (1..20).contains(&y)));
        let cs = extract_contours(&two);
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().all(|c| (c.solidity - 1.0).abs() < 1e-12));
        assert_eq!(cs[0].bbox, Rect::new(20, 1, 30, 20));
        assert_eq!(cs[1].area, 48);

        let c_shape = BinaryImage::from_fn(30, 30, |x, y| (5..25).contains(&x) && (5..25).contains(&y) && !((10..25).contains(&x) && (10..20).contains(&y)));
        let cs = extract_contours(&c_shape);
        assert_eq!(cs.len(), 1);
        // oracle: 400 - 150 pixels over a 20x20 hull
        assert_eq!(cs[0].area, 250);
        assert!((cs[0].solidity - 250.0 / 400.0).abs() < 1e-12);

        assert!(extract_contours(&BinaryImage::new(16, 16)).is_empty());
    }

    #[test]
    fn boundary_is_closed_and_on_edge() {
        let b = BinaryImage::from_fn(20, 20, |x, y| (3..12).contains(&x) && (4..9).contains(&y));
        let c = &extract_contours(&b)[0];
        assert_eq!(c.boundary.len(), 2 * (9 + 5) - 4);
        assert!(c.boundary.iter().all(|p| p.x == 3 || p.x == 11 || p.y == 4 || p.y == 8));
        let single = extract_contours(&BinaryImage::from_fn(16, 16, |x, y| x == 4 && y == 4));
        assert_eq!(single[0].boundary, vec![Point::new(4, 4)]);
    }

    #[test]
    fn enclosing_circle_cases() {
        let sq = contour_from_parts(
            vec![Point::new(0, 0), Point::new(10, 0), Point::new(10, 10), Point::new(0, 10)],
            SpanSet::from_rect(&Rect::new(0, 0, 10, 10)),
        );
        let c = min_enclosing_circle(&sq);
        assert!((c.cx - 5.0).abs() < 1e-9 && (c.cy - 5.0).abs() < 1e-9);
        assert!((c.r - 50f64.sqrt()).abs() < 1e-9);

        let disc = BinaryImage::from_fn(120, 120, |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - 60.0, y as f64 + 0.5 - 60.0);
            (dx * dx + dy * dy).sqrt() <= 40.0
        });
        let cs = extract_contours(&disc);
        let c = min_enclosing_circle(&cs[0]);
        assert!((39.5..=40.5).contains(&c.r), "r = {}", c.r);

        let one = min_enclosing_circle_points(&[(3.0, 4.0)]).unwrap();
        assert_eq!(one.r, 0.0);
    }
}
