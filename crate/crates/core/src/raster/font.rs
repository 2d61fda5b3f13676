//! Embedded 6×10 bitmap font for tick labels.

use crate::error::{Error, Result};

pub const GLYPH_WIDTH: usize = 6;
pub const GLYPH_HEIGHT: usize = 10;
pub const GLYPH_SPACING: usize = 1;

const GLYPHS: [(char, [&str; GLYPH_HEIGHT]); 15] = [
    ('0', [".####.", "#....#", "#....#", "#...##", "#..#.#", "#.#..#", "##...#", "#....#", "#....#", ".####."]),
    ('1', ["..##..", ".###..", "#.##..", "..##..", "..##..", "..##..", "..##..", "..##..", "..##..", "######"]),
    ('2', [".####.", "#....#", ".....#", ".....#", "....#.", "...#..", "..#...", ".#....", "#.....", "######"]),
    ('3', [".####.", "#....#", ".....#", ".....#", "..###.", ".....#", ".....#", ".....#", "#....#", ".####."]),
    ('4', ["....#.", "...##.", "..#.#.", ".#..#.", "#...#.", "######", "....#.", "....#.", "....#.", "....#."]),
    ('5', ["######", "#.....", "#.....", "#####.", ".....#", ".....#", ".....#", ".....#", "#....#", ".####."]),
    ('6', ["..###.", ".#....", "#.....", "#.....", "#####.", "#....#", "#....#", "#....#", "#....#", ".####."]),
    ('7', ["######", ".....#", "....#.", "....#.", "...#..", "...#..", "..#...", "..#...", ".#....", ".#...."]),
    ('8', [".####.", "#....#", "#....#", "#....#", ".####.", "#....#", "#....#", "#....#", "#....#", ".####."]),
    ('9', [".####.", "#....#", "#....#", "#....#", "#....#", ".#####", ".....#", ".....#", "....#.", ".###.."]),
    ('.', ["......", "......", "......", "......", "......", "......", "......", "......", "..##..", "..##.."]),
    ('-', ["......", "......", "......", "......", "......", "#####.", "......", "......", "......", "......"]),
    ('e', ["......", "......", "......", ".####.", "#....#", "######", "#.....", "#.....", "#....#", ".####."]),
    ('+', ["......", "......", "......", "..#...", "..#...", "#####.", "..#...", "..#...", "......", "......"]),
    (' ', ["......", "......", "......", "......", "......", "......", "......", "......", "......", "......"]),
];

/// Bitmap rows of a glyph; `'#'` marks ink.
pub fn glyph(c: char) -> Result<&'static [&'static str; GLYPH_HEIGHT]> {
    GLYPHS
        .iter()
        .find(|(g, _)| *g == c)
        .map(|(_, rows)| rows)
        .ok_or(Error::UnsupportedGlyph(c))
}

/// Rendered width in pixels of `n` glyphs.
pub fn text_width(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        n * GLYPH_WIDTH + (n - 1) * GLYPH_SPACING
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_well_formed() {
        for (c, rows) in GLYPHS {
            assert!(rows.iter().all(|r| r.len() == GLYPH_WIDTH), "{c}");
            assert!(rows.iter().all(|r| r.chars().all(|p| p == '#' || p == '.')));
        }
    }

    #[test]
    fn unsupported_glyph() {
        assert!(matches!(glyph('x'), Err(Error::UnsupportedGlyph('x'))));
    }

    #[test]
    fn width_formula() {
        assert_eq!(text_width(1), 6);
        assert_eq!(text_width(3), 3 * 6 + 2);
    }
}
