//! Mutable RGB canvas used by the chart generator and the mark overlay.

use crate::font;
use crate::geometry::{ChartImage, GeometryError, Rect, SpanSet};

#[derive(Debug, Clone)]
pub struct Canvas {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Canvas {
    pub fn new(width: u32, height: u32, background: [u8; 3]) -> Self {
        let pixels = background.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self { width, height, pixels }
    }

    pub fn from_image(img: &ChartImage) -> Self {
        Self { width: img.width(), height: img.height(), pixels: img.pixels().to_vec() }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn put(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    fn blend(&mut self, x: i64, y: i64, rgb: [u8; 3], alpha: f64) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let old = self.get(x as u32, y as u32);
        let mix = |o: u8, n: u8| (o as f64 * (1.0 - alpha) + n as f64 * alpha).round().clamp(0.0, 255.0) as u8;
        self.put(x, y, [mix(old[0], rgb[0]), mix(old[1], rgb[1]), mix(old[2], rgb[2])]);
    }

    pub fn fill_rect(&mut self, r: Rect, rgb: [u8; 3]) {
        for y in r.y0..r.y1.min(self.height) {
            for x in r.x0..r.x1.min(self.width) {
                self.put(x as i64, y as i64, rgb);
            }
        }
    }

    pub fn fill_spans(&mut self, spans: &SpanSet, rgb: [u8; 3]) {
        for p in spans.iter_pixels() {
            self.put(p.x as i64, p.y as i64, rgb);
        }
    }

    pub fn blend_spans(&mut self, spans: &SpanSet, rgb: [u8; 3], alpha: f64) {
        for p in spans.iter_pixels() {
            self.blend(p.x as i64, p.y as i64, rgb, alpha);
        }
    }

    /// Outline drawn inside `r`, `thickness` pixels wide.
    pub fn stroke_rect(&mut self, r: Rect, thickness: u32, rgb: [u8; 3]) {
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                let edge = x < r.x0 + thickness || x + thickness >= r.x1 || y < r.y0 + thickness || y + thickness >= r.y1;
                if edge {
                    self.put(x as i64, y as i64, rgb);
                }
            }
        }
    }

    /// Paints every pixel whose center lies within `half_width` of the
    /// segment from `a` to `b`.
    pub fn draw_segment(&mut self, a: (f64, f64), b: (f64, f64), half_width: f64, rgb: [u8; 3]) {
        let x_lo = (a.0.min(b.0) - half_width - 1.0).floor() as i64;
        let x_hi = (a.0.max(b.0) + half_width + 1.0).ceil() as i64;
        let y_lo = (a.1.min(b.1) - half_width - 1.0).floor() as i64;
        let y_hi = (a.1.max(b.1) + half_width + 1.0).ceil() as i64;
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        for y in y_lo.max(0)..=y_hi.min(self.height as i64 - 1) {
            for x in x_lo.max(0)..=x_hi.min(self.width as i64 - 1) {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let t = if len2 > 0.0 { (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
                if (px - qx).powi(2) + (py - qy).powi(2) <= half_width * half_width {
                    self.put(x, y, rgb);
                }
            }
        }
    }

    pub fn fill_circle(&mut self, cx: f64, cy: f64, r: f64, rgb: [u8; 3]) {
        let (x0, x1) = ((cx - r).floor() as i64, (cx + r).ceil() as i64);
        let (y0, y1) = ((cy - r).floor() as i64, (cy + r).ceil() as i64);
        for y in y0..=y1 {
            for x in x0..=x1 {
                if (x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2) <= r * r {
                    self.put(x, y, rgb);
                }
            }
        }
    }

    pub fn draw_text(&mut self, x: i64, y: i64, text: &str, scale: u32, rgb: [u8; 3]) {
        font::for_each_pixel(text, scale, |dx, dy| self.put(x + dx as i64, y + dy as i64, rgb));
    }

    pub fn into_image(self, id: impl Into<String>) -> Result<ChartImage, GeometryError> {
        ChartImage::new(id, self.width, self.height, self.pixels)
    }
}
