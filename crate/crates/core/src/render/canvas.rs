//! Minimal aliasing-free raster primitives on an RGB buffer.

use image::{Rgb, RgbImage};

use super::font;

pub type Color = [u8; 3];

pub const WHITE: Color = [255, 255, 255];
pub const BLACK: Color = [0, 0, 0];

pub struct Canvas {
    pub img: RgbImage,
}

impl Canvas {
    pub fn new(width: u32, height: u32, bg: Color) -> Self {
        Canvas {
            img: RgbImage::from_pixel(width, height, Rgb(bg)),
        }
    }

    pub fn from_image(img: RgbImage) -> Self {
        Canvas { img }
    }

    pub fn width(&self) -> i64 {
        self.img.width() as i64
    }

    pub fn height(&self) -> i64 {
        self.img.height() as i64
    }

    pub fn set(&mut self, x: i64, y: i64, c: Color) {
        if x >= 0 && y >= 0 && x < self.width() && y < self.height() {
            self.img.put_pixel(x as u32, y as u32, Rgb(c));
        }
    }

    /// Alpha-blends `c` over the existing pixel.
    pub fn blend(&mut self, x: i64, y: i64, c: Color, alpha: f64) {
        if x >= 0 && y >= 0 && x < self.width() && y < self.height() {
            let p = self.img.get_pixel_mut(x as u32, y as u32);
            for k in 0..3 {
                p.0[k] = (alpha * c[k] as f64 + (1.0 - alpha) * p.0[k] as f64).round() as u8;
            }
        }
    }

    pub fn fill_rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: Color) {
        for y in y0.min(y1)..=y0.max(y1) {
            for x in x0.min(x1)..=x0.max(x1) {
                self.set(x, y, c);
            }
        }
    }

    pub fn stroke_rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: Color) {
        self.hline(x0, x1, y0, c);
        self.hline(x0, x1, y1, c);
        self.vline(x0, y0, y1, c);
        self.vline(x1, y0, y1, c);
    }

    pub fn hline(&mut self, x0: i64, x1: i64, y: i64, c: Color) {
        for x in x0.min(x1)..=x0.max(x1) {
            self.set(x, y, c);
        }
    }

    pub fn vline(&mut self, x: i64, y0: i64, y1: i64, c: Color) {
        for y in y0.min(y1)..=y0.max(y1) {
            self.set(x, y, c);
        }
    }

    /// Bresenham line drawn with a square brush `width` pixels wide.
    pub fn line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, width: i64, c: Color) {
        let (mut x, mut y) = (x0, y0);
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        let lo = -(width - 1) / 2;
        let hi = width / 2;
        loop {
            for oy in lo..=hi {
                for ox in lo..=hi {
                    self.set(x + ox, y + oy, c);
                }
            }
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    pub fn polyline(&mut self, pts: &[(i64, i64)], width: i64, c: Color) {
        for w in pts.windows(2) {
            self.line(w[0].0, w[0].1, w[1].0, w[1].1, width, c);
        }
    }

    /// Scanline fill of a simple or self-intersecting polygon (even-odd rule),
    /// sampling at pixel centers. `alpha < 1` blends instead of painting.
    pub fn fill_polygon(&mut self, pts: &[(f64, f64)], c: Color, alpha: f64) {
        if pts.len() < 3 {
            return;
        }
        let ymin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor().max(0.0) as i64;
        let ymax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil().min(self.height() as f64) as i64;
        let mut xs: Vec<f64> = Vec::new();
        for y in ymin..ymax {
            let sy = y as f64 + 0.5;
            xs.clear();
            for i in 0..pts.len() {
                let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                if (a.1 <= sy && b.1 > sy) || (b.1 <= sy && a.1 > sy) {
                    xs.push(a.0 + (sy - a.1) / (b.1 - a.1) * (b.0 - a.0));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks(2) {
                if pair.len() < 2 {
                    break;
                }
                let x0 = (pair[0] - 0.5).ceil() as i64;
                let x1 = (pair[1] - 0.5).floor() as i64;
                for x in x0..=x1 {
                    if alpha >= 1.0 {
                        self.set(x, y, c);
                    } else {
                        self.blend(x, y, c, alpha);
                    }
                }
            }
        }
    }

    pub fn fill_circle(&mut self, cx: f64, cy: f64, r: f64, c: Color) {
        let (x0, x1) = ((cx - r).floor() as i64, (cx + r).ceil() as i64);
        let (y0, y1) = ((cy - r).floor() as i64, (cy + r).ceil() as i64);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= r * r {
                    self.set(x, y, c);
                }
            }
        }
    }

    pub fn stroke_circle(&mut self, cx: f64, cy: f64, r: f64, c: Color) {
        let (x0, x1) = ((cx - r - 1.0).floor() as i64, (cx + r + 1.0).ceil() as i64);
        let (y0, y1) = ((cy - r - 1.0).floor() as i64, (cy + r + 1.0).ceil() as i64);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt();
                if (d - r).abs() <= 0.6 {
                    self.set(x, y, c);
                }
            }
        }
    }

    /// Draws `text` with its top-left corner at `(x, y)`.
    pub fn text(&mut self, x: i64, y: i64, text: &str, scale: i64, c: Color) {
        let mut cx = x;
        for ch in text.chars() {
            let glyph = font::glyph(ch);
            for (row, bits) in glyph.iter().enumerate() {
                for col in 0..font::GLYPH_W {
                    if bits & (1 << (font::GLYPH_W - 1 - col)) != 0 {
                        let px = cx + col as i64 * scale;
                        let py = y + row as i64 * scale;
                        self.fill_rect(px, py, px + scale - 1, py + scale - 1, c);
                    }
                }
            }
            cx += font::ADVANCE as i64 * scale;
        }
    }

    pub fn text_width(text: &str, scale: i64) -> i64 {
        let n = text.chars().count() as i64;
        if n == 0 {
            0
        } else {
            (n * font::ADVANCE as i64 - 1) * scale
        }
    }

    pub fn text_height(scale: i64) -> i64 {
        font::GLYPH_H as i64 * scale
    }
}

/// Vertices of a regular star polygon with `points` tips, first tip up.
pub fn star(cx: f64, cy: f64, outer: f64, inner: f64, points: usize) -> Vec<(f64, f64)> {
    (0..2 * points)
        .map(|i| {
            let r = if i % 2 == 0 { outer } else { inner };
            let a = -std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / points as f64;
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}
