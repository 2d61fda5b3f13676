use super::font::{glyph, text_width, GLYPH_HEIGHT, GLYPH_SPACING, GLYPH_WIDTH};
use super::Rgb;
use crate::error::Result;

/// Distance from `(px, py)` to the segment `a`–`b`.
fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * dx - px, a.1 + t * dy - py);
    (cx * cx + cy * cy).sqrt()
}

/// Subsamples per pixel side.
const SUB: usize = 16;
const SUB_WORDS: usize = SUB * SUB / 64;
/// Half the pixel diagonal: a centre farther than this from an edge means the
/// whole pixel lies on one side of it.
const HALF_DIAG: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Per-pixel area coverage of a stroked polyline on a `width × height` grid.
///
/// The stroke is the union of round-capped segments of width `line_width`.
/// Pixel `(x, y)` spans `[x, x+1) × [y, y+1)`; its coverage is the fraction of
/// a 16×16 subsample grid inside the stroke. Subsample masks are OR-ed across
/// segments, so joins never double-count. Segments touching a non-finite point
/// are skipped, which breaks the line there.
pub fn polyline_coverage(
    width: usize,
    height: usize,
    points: &[(f64, f64)],
    line_width: f64,
) -> Vec<f32> {
    let half = line_width / 2.0;
    let reach = half + HALF_DIAG;
    let mut masks = vec![[0u64; SUB_WORDS]; width * height];
    for seg in points.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if !(a.0.is_finite() && a.1.is_finite() && b.0.is_finite() && b.1.is_finite()) {
            continue;
        }
        let x_lo = (a.0.min(b.0) - reach).floor().max(0.0) as usize;
        let y_lo = (a.1.min(b.1) - reach).floor().max(0.0) as usize;
        let x_hi = ((a.0.max(b.0) + reach).ceil().max(0.0) as usize).min(width);
        let y_hi = ((a.1.max(b.1) + reach).ceil().max(0.0) as usize).min(height);
        for y in y_lo..y_hi {
            for x in x_lo..x_hi {
                let mask = &mut masks[y * width + x];
                if mask.iter().all(|&w| w == u64::MAX) {
                    continue;
                }
                let d = segment_distance(x as f64 + 0.5, y as f64 + 0.5, a, b);
                if d >= half + HALF_DIAG {
                    continue;
                }
                if d <= half - HALF_DIAG {
                    *mask = [u64::MAX; SUB_WORDS];
                    continue;
                }
                for sy in 0..SUB {
                    let py = y as f64 + (sy as f64 + 0.5) / SUB as f64;
                    for sx in 0..SUB {
                        let px = x as f64 + (sx as f64 + 0.5) / SUB as f64;
                        if segment_distance(px, py, a, b) <= half {
                            let bit = sy * SUB + sx;
                            mask[bit / 64] |= 1 << (bit % 64);
                        }
                    }
                }
            }
        }
    }
    masks
        .iter()
        .map(|m| m.iter().map(|w| w.count_ones()).sum::<u32>() as f32 / (SUB * SUB) as f32)
        .collect()
}

/// RGB raster with channel values in `[0, 1]`, row-major from the top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
}

impl Canvas {
    pub fn new(width: usize, height: usize, background: Rgb) -> Self {
        let bg = background.unit();
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&bg);
        }
        Canvas {
            width,
            height,
            pixels,
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    fn blend(&mut self, idx: usize, color: [f32; 3], coverage: f32) {
        let p = &mut self.pixels[idx * 3..idx * 3 + 3];
        for (v, c) in p.iter_mut().zip(color) {
            *v = *v * (1.0 - coverage) + c * coverage;
        }
    }

    /// Strokes connected segments through `points` (pixel coordinates),
    /// blending `color` over the existing pixels by coverage.
    pub fn draw_polyline(&mut self, points: &[(f64, f64)], color: Rgb, line_width: f64) {
        if points.len() < 2 {
            return;
        }
        let cov = polyline_coverage(self.width, self.height, points, line_width);
        let c = color.unit();
        for (i, &a) in cov.iter().enumerate() {
            if a > 0.0 {
                self.blend(i, c, a);
            }
        }
    }

    /// Stamps `text` with its top-left corner at `(x, y)`; ink outside the
    /// canvas is clipped.
    pub fn draw_label(&mut self, text: &str, x: i64, y: i64, color: Rgb) -> Result<()> {
        let glyphs = text.chars().map(glyph).collect::<Result<Vec<_>>>()?;
        let c = color.unit();
        for (n, rows) in glyphs.iter().enumerate() {
            let gx = x + (n * (GLYPH_WIDTH + GLYPH_SPACING)) as i64;
            for (r, row) in rows.iter().enumerate() {
                for (col, bit) in row.bytes().enumerate() {
                    let (px, py) = (gx + col as i64, y + r as i64);
                    if bit == b'#'
                        && px >= 0
                        && py >= 0
                        && (px as usize) < self.width
                        && (py as usize) < self.height
                    {
                        self.blend(py as usize * self.width + px as usize, c, 1.0);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn label_size(text: &str) -> (usize, usize) {
        (text_width(text.chars().count()), GLYPH_HEIGHT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLACK: Rgb = Rgb(0, 0, 0);

    #[test]
    fn horizontal_segment_is_a_solid_run() {
        let cov = polyline_coverage(20, 9, &[(3.5, 4.5), (15.5, 4.5)], 1.5);
        for x in 4..=14 {
            assert_eq!(cov[4 * 20 + x], 1.0, "x={x}");
            assert_eq!(cov[3 * 20 + x], 0.25);
            assert_eq!(cov[5 * 20 + x], 0.25);
        }
        assert_eq!(cov[2 * 20 + 8], 0.0);
    }

    #[test]
    fn diagonal_has_one_full_pixel_per_column() {
        let n = 12;
        let cov = polyline_coverage(20, 20, &[(2.5, 3.5), (2.5 + (n - 1) as f64, 3.5 + (n - 1) as f64)], 1.5);
        let full: Vec<(usize, usize)> = (0..400).filter(|&i| cov[i] == 1.0).map(|i| (i % 20, i / 20)).collect();
        assert_eq!(full.len(), n);
        assert!(full.iter().all(|&(x, y)| y == x + 1));
        assert!(cov.iter().any(|&c| c > 0.0 && c < 1.0));
    }

    #[test]
    fn nan_breaks_the_line() {
        let pts = [(1.5, 1.5), (5.5, 1.5), (f64::NAN, f64::NAN), (10.5, 1.5), (14.5, 1.5)];
        let cov = polyline_coverage(16, 4, &pts, 1.5);
        assert_eq!(cov[1 * 16 + 8], 0.0);
        assert_eq!(cov[1 * 16 + 3], 1.0);
        assert_eq!(cov[1 * 16 + 12], 1.0);
    }

    #[test]
    fn zero_glyph_matches_font_table() {
        let mut c = Canvas::new(10, 12, Rgb(255, 255, 255));
        c.draw_label("0", 1, 1, BLACK).unwrap();
        let rows = glyph('0').unwrap();
        for (r, row) in rows.iter().enumerate() {
            for (col, bit) in row.bytes().enumerate() {
                let expected = if bit == b'#' { 0.0 } else { 1.0 };
                assert_eq!(c.pixel(col + 1, r + 1), [expected; 3]);
            }
        }
    }

    #[test]
    fn label_width() {
        assert_eq!(Canvas::label_size("1.5"), (3 * 6 + 2, 10));
        let mut c = Canvas::new(40, 12, Rgb(255, 255, 255));
        c.draw_label("8888", 0, 0, BLACK).unwrap();
        let inked: Vec<usize> = (0..40).filter(|&x| (0..12).any(|y| c.pixel(x, y)[0] < 1.0)).collect();
        assert_eq!(*inked.last().unwrap() + 1, text_width(4));
    }

    #[test]
    fn unsupported_glyph_errors() {
        let mut c = Canvas::new(10, 10, Rgb(255, 255, 255));
        assert!(c.draw_label("1a", 0, 0, BLACK).is_err());
    }

    #[test]
    fn clipped_label_stays_on_canvas() {
        let mut c = Canvas::new(8, 8, Rgb(255, 255, 255));
        c.draw_label("-1.5", -9, -4, BLACK).unwrap();
        c.draw_label("42", 5, 5, BLACK).unwrap();
    }
}
