//! Bitmap glyph fonts.
//!
//! The built-in font is a 5x7 pixel face covering the 36-character set.
//! Custom fonts load from a plain text file: a `cell W H` header line,
//! then for each character a `char X` line followed by H rows of `.`/`#`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::charset::{self, N_VIS};
use super::GlyphError;

/// A fixed-cell bitmap font over the visual charset.
#[derive(Debug, Clone)]
pub struct GlyphFont {
    pub cell_width: usize,
    pub cell_height: usize,
    /// Per charset index: row-major bitmap, `cell_height * cell_width` cells.
    bitmaps: Vec<Vec<bool>>,
    pub name: String,
}

impl GlyphFont {
    /// The bundled 5x7 face.
    pub fn builtin() -> Self {
        let mut bitmaps = vec![Vec::new(); N_VIS];
        for (c, rows) in BUILTIN_5X7 {
            let idx = charset::char_index(*c).expect("builtin glyph outside charset");
            let mut bits = Vec::with_capacity(35);
            for row in rows.iter() {
                assert_eq!(row.len(), 5, "builtin glyph row width for {c:?}");
                bits.extend(row.bytes().map(|b| b == b'#'));
            }
            bitmaps[idx] = bits;
        }
        let font = GlyphFont {
            cell_width: 5,
            cell_height: 7,
            bitmaps,
            name: "builtin-5x7".into(),
        };
        font.check().expect("builtin font invariants");
        font
    }

    /// Load a font from the plain-text bitmap format.
    pub fn load(path: &Path) -> Result<Self, GlyphError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GlyphError::Io(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, name: &str) -> Result<Self, GlyphError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| GlyphError::FontFormat("empty file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("cell") {
            return Err(GlyphError::FontFormat("expected `cell W H` header".into()));
        }
        let cw: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| GlyphError::FontFormat("bad cell width".into()))?;
        let ch: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| GlyphError::FontFormat("bad cell height".into()))?;
        let mut seen: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
        let mut lines = lines.peekable();
        while let Some(line) = lines.next() {
            let line = line.trim();
            let Some(rest) = line.strip_prefix("char ") else {
                return Err(GlyphError::FontFormat(format!("expected `char X`, got {line:?}")));
            };
            let c = rest.trim().chars().next().ok_or_else(|| {
                GlyphError::FontFormat("missing character after `char`".into())
            })?;
            let idx = charset::char_index(c).ok_or(GlyphError::BadChar(c))?;
            let mut bits = Vec::with_capacity(cw * ch);
            for _ in 0..ch {
                let row = lines
                    .next()
                    .ok_or_else(|| GlyphError::FontFormat(format!("truncated glyph {c:?}")))?
                    .trim();
                if row.chars().count() != cw {
                    return Err(GlyphError::FontFormat(format!(
                        "glyph {c:?}: row width {} != {cw}",
                        row.chars().count()
                    )));
                }
                bits.extend(row.chars().map(|p| p == '#'));
            }
            seen.insert(idx, bits);
        }
        let mut bitmaps = vec![Vec::new(); N_VIS];
        for (idx, bits) in seen {
            bitmaps[idx] = bits;
        }
        let font = GlyphFont {
            cell_width: cw,
            cell_height: ch,
            bitmaps,
            name: name.into(),
        };
        font.check()?;
        Ok(font)
    }

    /// Bitmap for a charset index; row-major, true = inked.
    pub fn bitmap(&self, idx: usize) -> &[bool] {
        &self.bitmaps[idx]
    }

    /// Bitmap flattened to 0/1 floats, used as a similarity proxy.
    pub fn bitmap_f64(&self, idx: usize) -> Vec<f64> {
        self.bitmaps[idx].iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    fn check(&self) -> Result<(), GlyphError> {
        for (i, b) in self.bitmaps.iter().enumerate() {
            if b.len() != self.cell_width * self.cell_height {
                return Err(GlyphError::FontFormat(format!(
                    "missing or misshapen glyph for {:?}",
                    charset::index_char(i)
                )));
            }
        }
        for i in 0..N_VIS {
            for j in i + 1..N_VIS {
                if self.bitmaps[i] == self.bitmaps[j] {
                    return Err(GlyphError::DuplicateGlyphs(
                        charset::index_char(i),
                        charset::index_char(j),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[rustfmt::skip]
const BUILTIN_5X7: &[(char, [&str; 7])] = &[
    ('a', [".....",
           ".....",
           ".###.",
           "....#",
           ".####",
           "#...#",
           ".####"]),
    ('b', ["#....",
           "#....",
           "#.##.",
           "##..#",
           "#...#",
           "##..#",
           "#.##."]),
    ('c', [".....",
           ".....",
           ".###.",
           "#....",
           "#....",
           "#...#",
           ".###."]),
    ('d', ["....#",
           "....#",
           ".##.#",
           "#..##",
           "#...#",
           "#..##",
           ".##.#"]),
    ('e', [".....",
           ".....",
           ".###.",
           "#...#",
           "#####",
           "#....",
           ".###."]),
    ('f', ["..##.",
           ".#..#",
           ".#...",
           "###..",
           ".#...",
           ".#...",
           ".#..."]),
    ('g', [".....",
           ".####",
           "#...#",
           "#...#",
           ".####",
           "....#",
           ".###."]),
    ('h', ["#....",
           "#....",
           "#.##.",
           "##..#",
           "#...#",
           "#...#",
           "#...#"]),
    ('i', ["..#..",
           ".....",
           ".##..",
           "..#..",
           "..#..",
           "..#..",
           ".###."]),
    ('j', ["...#.",
           ".....",
           "..##.",
           "...#.",
           "...#.",
           "#..#.",
           ".##.."]),
    ('k', ["#....",
           "#....",
           "#..#.",
           "#.#..",
           "##...",
           "#.#..",
           "#..#."]),
    ('l', [".##..",
           "..#..",
           "..#..",
           "..#..",
           "..#..",
           "..#..",
           ".###."]),
    ('m', [".....",
           ".....",
           "##.#.",
           "#.#.#",
           "#.#.#",
           "#.#.#",
           "#...#"]),
    ('n', [".....",
           ".....",
           "#.##.",
           "##..#",
           "#...#",
           "#...#",
           "#...#"]),
    ('o', [".....",
           ".....",
           ".###.",
           "#...#",
           "#...#",
           "#...#",
           ".###."]),
    ('p', [".....",
           "####.",
           "#...#",
           "#...#",
           "####.",
           "#....",
           "#...."]),
    ('q', [".....",
           ".####",
           "#...#",
           "#...#",
           ".####",
           "....#",
           "....#"]),
    ('r', [".....",
           ".....",
           "#.##.",
           "##..#",
           "#....",
           "#....",
           "#...."]),
    ('s', [".....",
           ".....",
           ".####",
           "#....",
           ".###.",
           "....#",
           "####."]),
    ('t', [".#...",
           ".#...",
           "###..",
           ".#...",
           ".#...",
           ".#..#",
           "..##."]),
    ('u', [".....",
           ".....",
           "#...#",
           "#...#",
           "#...#",
           "#..##",
           ".##.#"]),
    ('v', [".....",
           ".....",
           "#...#",
           "#...#",
           "#...#",
           ".#.#.",
           "..#.."]),
    ('w', [".....",
           ".....",
           "#...#",
           "#.#.#",
           "#.#.#",
           "#.#.#",
           ".#.#."]),
    ('x', [".....",
           ".....",
           "#...#",
           ".#.#.",
           "..#..",
           ".#.#.",
           "#...#"]),
    ('y', [".....",
           "#...#",
           "#...#",
           "#...#",
           ".####",
           "....#",
           ".###."]),
    ('z', [".....",
           ".....",
           "#####",
           "...#.",
           "..#..",
           ".#...",
           "#####"]),
    ('0', [".###.",
           "#...#",
           "#..##",
           "#.#.#",
           "##..#",
           "#...#",
           ".###."]),
    ('1', ["..#..",
           ".##..",
           "..#..",
           "..#..",
           "..#..",
           "..#..",
           ".###."]),
    ('2', [".###.",
           "#...#",
           "....#",
           "...#.",
           "..#..",
           ".#...",
           "#####"]),
    ('3', [".###.",
           "#...#",
           "....#",
           "..##.",
           "....#",
           "#...#",
           ".###."]),
    ('4', ["...#.",
           "..##.",
           ".#.#.",
           "#..#.",
           "#####",
           "...#.",
           "...#."]),
    ('5', ["#####",
           "#....",
           "####.",
           "....#",
           "....#",
           "#...#",
           ".###."]),
    ('6', ["..##.",
           ".#...",
           "#....",
           "####.",
           "#...#",
           "#...#",
           ".###."]),
    ('7', ["#####",
           "....#",
           "...#.",
           "..#..",
           "..#..",
           ".#...",
           ".#..."]),
    ('8', [".###.",
           "#...#",
           "#...#",
           ".###.",
           "#...#",
           "#...#",
           ".###."]),
    ('9', [".###.",
           "#...#",
           "#...#",
           ".####",
           "....#",
           "...#.",
           ".##.."]),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_covers_charset_with_distinct_glyphs() {
        let font = GlyphFont::builtin();
        assert_eq!(font.cell_width, 5);
        assert_eq!(font.cell_height, 7);
        for i in 0..N_VIS {
            assert_eq!(font.bitmap(i).len(), 35);
            assert!(font.bitmap(i).iter().any(|&b| b), "glyph {i} is blank");
        }
    }

    #[test]
    fn parse_roundtrip_subset_rejected() {
        // A file that misses most glyphs must fail the coverage check.
        let text = "cell 2 2\nchar a\n##\n..\n";
        let err = GlyphFont::parse(text, "t").unwrap_err();
        assert!(matches!(err, GlyphError::FontFormat(_)));
    }

    #[test]
    fn parse_rejects_duplicate_bitmaps() {
        let mut text = String::from("cell 1 1\n");
        for c in charset::CHARS {
            text.push_str(&format!("char {c}\n#\n"));
        }
        let err = GlyphFont::parse(&text, "t").unwrap_err();
        assert!(matches!(err, GlyphError::DuplicateGlyphs(_, _)));
    }
}
