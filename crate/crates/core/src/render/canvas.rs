use serde::{Deserialize, Serialize};

use super::font;

/// An 8-bit RGB colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const BLACK: Rgb = Rgb([0, 0, 0]);
    pub const WHITE: Rgb = Rgb([255, 255, 255]);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb([r, g, b])
    }

    /// Multiplies each channel by `factor`, saturating.
    pub fn scaled(self, factor: f64) -> Rgb {
        let f = |c: u8| (c as f64 * factor).round().clamp(0.0, 255.0) as u8;
        Rgb([f(self.0[0]), f(self.0[1]), f(self.0[2])])
    }
}

/// Row-major RGB8 pixel buffer.
#[derive(Clone, PartialEq, Eq)]
pub struct Canvas {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Canvas {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Canvas({}x{})", self.width, self.height)
    }
}

/// Options for [`Canvas::blit`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Blit {
    /// Destination size; the source is scaled with nearest-neighbour sampling.
    pub size: Option<(u32, u32)>,
    /// Counter-clockwise rotation about the destination centre, in degrees.
    pub rotation_deg: f64,
    /// Only draw pixels inside the circle inscribed in the destination rect.
    pub circular_mask: bool,
}

impl Canvas {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            pixels.extend_from_slice(&fill.0);
        }
        Self { width, height, pixels }
    }

    /// Wraps an existing buffer; returns `None` when its length is not
    /// `width * height * 3`.
    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Option<Self> {
        (pixels.len() == width as usize * height as usize * 3).then_some(Self { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    fn index(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = self.index(x, y);
        Rgb([self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]])
    }

    /// Writes one pixel; out-of-bounds coordinates are ignored.
    pub fn put(&mut self, x: i64, y: i64, color: Rgb) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = self.index(x as u32, y as u32);
        self.pixels[i..i + 3].copy_from_slice(&color.0);
    }

    pub fn fill(&mut self, color: Rgb) {
        for px in self.pixels.chunks_exact_mut(3) {
            px.copy_from_slice(&color.0);
        }
    }

    pub fn fill_rect(&mut self, x: i64, y: i64, w: i64, h: i64, color: Rgb) {
        let x0 = x.max(0);
        let y0 = y.max(0);
        let x1 = (x + w).min(self.width as i64);
        let y1 = (y + h).min(self.height as i64);
        if x0 >= x1 || y0 >= y1 {
            return;
        }
        for yy in y0..y1 {
            let start = self.index(x0 as u32, yy as u32);
            let end = start + (x1 - x0) as usize * 3;
            for px in self.pixels[start..end].chunks_exact_mut(3) {
                px.copy_from_slice(&color.0);
            }
        }
    }

    /// One-pixel outline of a rectangle.
    pub fn stroke_rect(&mut self, x: i64, y: i64, w: i64, h: i64, color: Rgb) {
        if w <= 0 || h <= 0 {
            return;
        }
        self.fill_rect(x, y, w, 1, color);
        self.fill_rect(x, y + h - 1, w, 1, color);
        self.fill_rect(x, y, 1, h, color);
        self.fill_rect(x + w - 1, y, 1, h, color);
    }

    /// One-pixel Bresenham line, endpoints inclusive.
    pub fn line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, color: Rgb) {
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.put(x, y, color);
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

    /// Fills a convex polygon: a pixel is painted when its centre lies inside
    /// or on the boundary. Vertex winding may be either direction.
    pub fn fill_convex(&mut self, pts: &[(f64, f64)], color: Rgb) {
        if pts.len() < 3 {
            return;
        }
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for &(x, y) in pts {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        let x0 = (min_x.floor() as i64).max(0);
        let y0 = (min_y.floor() as i64).max(0);
        let x1 = (max_x.ceil() as i64).min(self.width as i64 - 1);
        let y1 = (max_y.ceil() as i64).min(self.height as i64 - 1);
        let n = pts.len();
        for y in y0..=y1 {
            let py = y as f64 + 0.5;
            for x in x0..=x1 {
                let px = x as f64 + 0.5;
                let (mut pos, mut neg) = (false, false);
                for i in 0..n {
                    let (ax, ay) = pts[i];
                    let (bx, by) = pts[(i + 1) % n];
                    let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
                    if cross > 1e-9 {
                        pos = true;
                    } else if cross < -1e-9 {
                        neg = true;
                    }
                    if pos && neg {
                        break;
                    }
                }
                if !(pos && neg) {
                    self.put(x, y, color);
                }
            }
        }
    }

    pub fn fill_circle(&mut self, cx: f64, cy: f64, r: f64, color: Rgb) {
        let x0 = (cx - r).floor() as i64;
        let x1 = (cx + r).ceil() as i64;
        let y0 = (cy - r).floor() as i64;
        let y1 = (cy + r).ceil() as i64;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= r * r {
                    self.put(x, y, color);
                }
            }
        }
    }

    /// Draws `text` with the embedded 5x7 font; each glyph cell is 6x8 font
    /// pixels, multiplied by `scale`.
    pub fn text(&mut self, x: i64, y: i64, text: &str, scale: u32, color: Rgb) {
        let s = scale.max(1) as i64;
        for (i, ch) in text.chars().enumerate() {
            let rows = font::glyph(ch);
            let gx = x + i as i64 * 6 * s;
            for (ry, bits) in rows.iter().enumerate() {
                for cx in 0..5 {
                    if bits & (0x10 >> cx) != 0 {
                        self.fill_rect(gx + cx * s, y + ry as i64 * s, s, s, color);
                    }
                }
            }
        }
    }

    /// Copies `src` with its destination rectangle's top-left at `(x, y)`.
    /// Pixels that map outside the source (after rotation) are left as-is.
    pub fn blit(&mut self, src: &Canvas, x: i64, y: i64, opts: Blit) {
        let (dw, dh) = opts.size.unwrap_or((src.width, src.height));
        if dw == 0 || dh == 0 || src.width == 0 || src.height == 0 {
            return;
        }
        let (sin, cos) = exact_sin_cos(opts.rotation_deg);
        let (cx, cy) = (dw as f64 / 2.0, dh as f64 / 2.0);
        let sx_scale = src.width as f64 / dw as f64;
        let sy_scale = src.height as f64 / dh as f64;
        let r2 = cx.min(cy) * cx.min(cy);
        for dy in 0..dh as i64 {
            let ty = y + dy;
            if ty < 0 || ty >= self.height as i64 {
                continue;
            }
            for dx in 0..dw as i64 {
                let tx = x + dx;
                if tx < 0 || tx >= self.width as i64 {
                    continue;
                }
                let ox = dx as f64 + 0.5 - cx;
                let oy = dy as f64 + 0.5 - cy;
                if opts.circular_mask && ox * ox + oy * oy > r2 {
                    continue;
                }
                // Inverse rotation; screen y points down so a visual
                // counter-clockwise turn is clockwise in these coordinates.
                let rx = cos * ox - sin * oy;
                let ry = sin * ox + cos * oy;
                let u = ((rx + cx) * sx_scale).floor();
                let v = ((ry + cy) * sy_scale).floor();
                if u < 0.0 || v < 0.0 || u >= src.width as f64 || v >= src.height as f64 {
                    continue;
                }
                let si = src.index(u as u32, v as u32);
                let di = self.index(tx as u32, ty as u32);
                self.pixels[di..di + 3].copy_from_slice(&src.pixels[si..si + 3]);
            }
        }
    }

    /// Returns the sub-rectangle `(x, y, w, h)`, clipped to the canvas.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Canvas {
        let w = w.min(self.width.saturating_sub(x));
        let h = h.min(self.height.saturating_sub(y));
        let mut out = Vec::with_capacity(w as usize * h as usize * 3);
        for row in y..y + h {
            let start = self.index(x, row);
            out.extend_from_slice(&self.pixels[start..start + w as usize * 3]);
        }
        Canvas { width: w, height: h, pixels: out }
    }

    /// Nearest-neighbour resample of the floating-point source rectangle
    /// `(x, y, w, h)` to `out_w x out_h`.
    pub fn resample(&self, x: f64, y: f64, w: f64, h: f64, out_w: u32, out_h: u32) -> Canvas {
        let mut out = Canvas::new(out_w, out_h, Rgb::BLACK);
        for v in 0..out_h {
            let sy = (y + (v as f64 + 0.5) * h / out_h as f64).floor().clamp(0.0, self.height as f64 - 1.0) as u32;
            for u in 0..out_w {
                let sx = (x + (u as f64 + 0.5) * w / out_w as f64).floor().clamp(0.0, self.width as f64 - 1.0) as u32;
                let si = self.index(sx, sy);
                let di = out.index(u, v);
                out.pixels[di..di + 3].copy_from_slice(&self.pixels[si..si + 3]);
            }
        }
        out
    }

    /// Mean absolute per-channel difference; `None` on size mismatch.
    pub fn mean_abs_diff(&self, other: &Canvas) -> Option<f64> {
        if self.width != other.width || self.height != other.height {
            return None;
        }
        let total: u64 = self.pixels.iter().zip(&other.pixels).map(|(a, b)| a.abs_diff(*b) as u64).sum();
        Some(total as f64 / self.pixels.len().max(1) as f64)
    }

    pub fn count_color(&self, color: Rgb) -> usize {
        self.pixels.chunks_exact(3).filter(|px| *px == color.0).count()
    }
}

/// Sine and cosine with exact values at multiples of 90 degrees.
pub fn exact_sin_cos(deg: f64) -> (f64, f64) {
    let d = deg.rem_euclid(360.0);
    if d == 0.0 {
        (0.0, 1.0)
    } else if d == 90.0 {
        (1.0, 0.0)
    } else if d == 180.0 {
        (0.0, -1.0)
    } else if d == 270.0 {
        (-1.0, 0.0)
    } else {
        d.to_radians().sin_cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sprite() -> Canvas {
        let mut c = Canvas::new(16, 16, Rgb::new(10, 20, 30));
        c.fill_rect(1, 2, 5, 3, Rgb::new(200, 0, 0));
        c.line(0, 15, 15, 9, Rgb::new(0, 200, 0));
        c.put(14, 1, Rgb::WHITE);
        c
    }

    #[test]
    fn fill_and_read_corner() {
        let mut c = Canvas::new(4, 3, Rgb::BLACK);
        c.fill(Rgb::WHITE);
        assert_eq!(c.get(3, 2), Rgb::WHITE);
        assert_eq!(c.pixels().len(), 4 * 3 * 3);
    }

    #[test]
    fn identity_rotation_blit() {
        let s = sprite();
        let mut out = Canvas::new(16, 16, Rgb::BLACK);
        out.blit(&s, 0, 0, Blit::default());
        assert_eq!(out, s);
    }

    #[test]
    fn four_quarter_turns_are_identity() {
        let mut cur = sprite();
        for _ in 0..4 {
            let mut next = Canvas::new(16, 16, Rgb::BLACK);
            next.blit(&cur, 0, 0, Blit { rotation_deg: 90.0, ..Blit::default() });
            assert_ne!(next, cur);
            cur = next;
        }
        assert_eq!(cur, sprite());
    }

    #[test]
    fn quarter_turn_is_counter_clockwise() {
        let mut s = Canvas::new(4, 4, Rgb::BLACK);
        s.put(3, 0, Rgb::WHITE); // top-right
        let mut out = Canvas::new(4, 4, Rgb::BLACK);
        out.blit(&s, 0, 0, Blit { rotation_deg: 90.0, ..Blit::default() });
        assert_eq!(out.get(0, 0), Rgb::WHITE); // moves to top-left
    }

    #[test]
    fn clipping_never_panics() {
        let mut c = Canvas::new(8, 8, Rgb::BLACK);
        c.fill_rect(-5, -5, 100, 3, Rgb::WHITE);
        c.line(-10, -10, 20, 30, Rgb::WHITE);
        c.fill_convex(&[(-4.0, -4.0), (40.0, 2.0), (3.0, 50.0)], Rgb::WHITE);
        c.text(6, 6, "HELLO", 3, Rgb::WHITE);
        c.blit(&sprite(), -8, 5, Blit { size: Some((30, 30)), rotation_deg: 33.0, circular_mask: true });
        c.fill_circle(-3.0, 9.0, 5.0, Rgb::WHITE);
    }

    #[test]
    fn convex_fill_covers_square() {
        let mut c = Canvas::new(10, 10, Rgb::BLACK);
        c.fill_convex(&[(2.0, 2.0), (6.0, 2.0), (6.0, 6.0), (2.0, 6.0)], Rgb::WHITE);
        assert_eq!(c.count_color(Rgb::WHITE), 16);
    }

    #[test]
    fn bresenham_endpoints() {
        let mut c = Canvas::new(10, 10, Rgb::BLACK);
        c.line(1, 1, 8, 4, Rgb::WHITE);
        assert_eq!(c.get(1, 1), Rgb::WHITE);
        assert_eq!(c.get(8, 4), Rgb::WHITE);
        assert_eq!(c.count_color(Rgb::WHITE), 8);
    }
}
