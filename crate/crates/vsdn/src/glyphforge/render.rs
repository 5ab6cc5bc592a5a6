//! Word-image rendering with controllable distortions.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::charset;
use super::{GlyphError, GlyphFont};

/// One rendered word image. Pixels are grayscale in [0, 1].
#[derive(Debug, Clone)]
pub struct TextImage {
    pub pixels: Array2<f64>,
    pub label: String,
    pub meta: RenderMeta,
}

/// What produced the image; enough to regenerate it bit-exactly.
#[derive(Debug, Clone)]
pub struct RenderMeta {
    pub seed: u64,
    pub style: DistortionParams,
}

/// A concrete distortion setting for one rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionParams {
    /// Integer glyph upscale factor (clamped down if the word would not fit).
    pub scale: usize,
    /// Max horizontal per-glyph jitter in pixels.
    pub jitter_px: usize,
    /// Max vertical per-glyph jitter in pixels.
    pub vjitter_px: usize,
    /// Additive Gaussian pixel noise standard deviation.
    pub noise_sigma: f64,
    /// Gaussian blur kernel half-width in pixels; 0 disables.
    pub blur_radius: usize,
    /// Probability of a single occluding rectangle.
    pub occlusion_prob: f64,
    /// Foreground ink intensity.
    pub contrast: f64,
}

impl DistortionParams {
    /// Clean rendering: centered, full contrast, no corruption.
    pub fn none() -> Self {
        DistortionParams {
            scale: 3,
            jitter_px: 0,
            vjitter_px: 0,
            noise_sigma: 0.0,
            blur_radius: 0,
            occlusion_prob: 0.0,
            contrast: 1.0,
        }
    }
}

/// Ranges that per-image styles are sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleRanges {
    pub scale: (usize, usize),
    pub jitter_px: (usize, usize),
    pub vjitter_px: (usize, usize),
    pub noise_sigma: (f64, f64),
    pub blur_radius: (usize, usize),
    pub occlusion_prob: f64,
    pub contrast: (f64, f64),
}

impl Default for StyleRanges {
    fn default() -> Self {
        StyleRanges {
            scale: (2, 4),
            jitter_px: (0, 1),
            vjitter_px: (0, 1),
            noise_sigma: (0.0, 0.12),
            blur_radius: (0, 1),
            occlusion_prob: 0.15,
            contrast: (0.6, 1.0),
        }
    }
}

impl StyleRanges {
    /// Draw one concrete style.
    pub fn sample(&self, rng: &mut impl Rng) -> DistortionParams {
        let (s0, s1) = self.scale;
        let (j0, j1) = self.jitter_px;
        let (v0, v1) = self.vjitter_px;
        let (n0, n1) = self.noise_sigma;
        let (b0, b1) = self.blur_radius;
        let (c0, c1) = self.contrast;
        DistortionParams {
            scale: rng.random_range(s0..=s1),
            jitter_px: rng.random_range(j0..=j1),
            vjitter_px: rng.random_range(v0..=v1),
            noise_sigma: rng.random_range(n0..=n1),
            blur_radius: rng.random_range(b0..=b1),
            occlusion_prob: self.occlusion_prob,
            contrast: rng.random_range(c0..=c1),
        }
    }
}

/// Image geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub height: usize,
    pub width: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { height: 32, width: 96 }
    }
}

const MARGIN: usize = 2;

/// Largest glyph scale at which `len` glyphs fit the canvas, or None if
/// the word does not fit even at scale 1.
fn fit_scale(font: &GlyphFont, geom: Geometry, len: usize) -> Option<usize> {
    // Each glyph is cw*s wide with s pixels of spacing between glyphs.
    let fits = |s: usize| {
        let w = len * font.cell_width * s + (len - 1) * s;
        let h = font.cell_height * s;
        w + 2 * MARGIN <= geom.width && h + 2 * MARGIN <= geom.height
    };
    if !fits(1) {
        return None;
    }
    let mut s = 1;
    while fits(s + 1) {
        s += 1;
    }
    Some(s)
}

/// Render a word deterministically from (word, style, seed).
pub fn render_word(
    word: &str,
    font: &GlyphFont,
    geom: Geometry,
    style: &DistortionParams,
    seed: u64,
) -> Result<TextImage, GlyphError> {
    if word.is_empty() {
        return Err(GlyphError::EmptyWord);
    }
    let indices = charset::encode_label(word).map_err(GlyphError::BadChar)?;
    let len = indices.len();
    let max_scale =
        fit_scale(font, geom, len).ok_or_else(|| GlyphError::WordTooLong(word.into()))?;
    let scale = style.scale.clamp(1, max_scale);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = Array2::<f64>::zeros((geom.height, geom.width));

    let (cw, ch) = (font.cell_width, font.cell_height);
    let total_w = len * cw * scale + (len - 1) * scale;
    let mut x = (geom.width - total_w) / 2;
    let y0 = (geom.height - ch * scale) / 2;

    for &gi in &indices {
        let dx = jitter(&mut rng, style.jitter_px);
        let dy = jitter(&mut rng, style.vjitter_px);
        let bitmap = font.bitmap(gi);
        for r in 0..ch {
            for c in 0..cw {
                if !bitmap[r * cw + c] {
                    continue;
                }
                for sr in 0..scale {
                    for sc in 0..scale {
                        let py = y0 as isize + (r * scale + sr) as isize + dy;
                        let px = x as isize + (c * scale + sc) as isize + dx;
                        if py >= 0
                            && px >= 0
                            && (py as usize) < geom.height
                            && (px as usize) < geom.width
                        {
                            img[(py as usize, px as usize)] = style.contrast;
                        }
                    }
                }
            }
        }
        x += cw * scale + scale;
    }

    if style.occlusion_prob > 0.0 && rng.random::<f64>() < style.occlusion_prob {
        occlude(&mut img, &mut rng);
    }
    if style.blur_radius > 0 {
        img = gaussian_blur(&img, style.blur_radius);
    }
    if style.noise_sigma > 0.0 {
        let normal = StandardNormal;
        for v in img.iter_mut() {
            let n: f64 = normal.sample(&mut rng);
            *v += style.noise_sigma * n;
        }
    }
    img.mapv_inplace(|v| v.clamp(0.0, 1.0));

    Ok(TextImage {
        pixels: img,
        label: word.to_string(),
        meta: RenderMeta { seed, style: style.clone() },
    })
}

fn jitter(rng: &mut impl Rng, max: usize) -> isize {
    if max == 0 {
        0
    } else {
        rng.random_range(-(max as i64)..=max as i64) as isize
    }
}

fn occlude(img: &mut Array2<f64>, rng: &mut impl Rng) {
    let (h, w) = img.dim();
    let rw = rng.random_range(2..=(w / 6).max(2));
    let rh = rng.random_range(2..=(h / 3).max(2));
    let x0 = rng.random_range(0..w.saturating_sub(rw).max(1));
    let y0 = rng.random_range(0..h.saturating_sub(rh).max(1));
    let fill: f64 = rng.random();
    for y in y0..(y0 + rh).min(h) {
        for x in x0..(x0 + rw).min(w) {
            img[(y, x)] = fill;
        }
    }
}

/// Separable Gaussian blur with sigma = radius / 1.5.
fn gaussian_blur(img: &Array2<f64>, radius: usize) -> Array2<f64> {
    let sigma = radius as f64 / 1.5;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        kernel.push((-d * d / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    let (h, w) = img.dim();
    let r = radius as isize;
    let mut tmp = Array2::<f64>::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let xx = (x as isize + i as isize - r).clamp(0, w as isize - 1) as usize;
                acc += k * img[(y, xx)];
            }
            tmp[(y, x)] = acc;
        }
    }
    let mut out = Array2::<f64>::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let yy = (y as isize + i as isize - r).clamp(0, h as isize - 1) as usize;
                acc += k * tmp[(yy, x)];
            }
            out[(y, x)] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtin() -> GlyphFont {
        GlyphFont::builtin()
    }

    #[test]
    fn identity_rendering_matches_upscaled_bitmap() {
        let font = builtin();
        let geom = Geometry::default();
        let style = DistortionParams { scale: 2, ..DistortionParams::none() };
        let img = render_word("a", &font, geom, &style, 0).unwrap();
        assert_eq!(img.label, "a");
        // Locate the stamped region and compare to the upscaled bitmap.
        let total_w = font.cell_width * 2;
        let x0 = (geom.width - total_w) / 2;
        let y0 = (geom.height - font.cell_height * 2) / 2;
        let bitmap = font.bitmap(charset::char_index('a').unwrap());
        for r in 0..font.cell_height * 2 {
            for c in 0..font.cell_width * 2 {
                let expect = if bitmap[(r / 2) * font.cell_width + c / 2] { 1.0 } else { 0.0 };
                assert_eq!(img.pixels[(y0 + r, x0 + c)], expect, "at ({r},{c})");
            }
        }
        // Everything outside the glyph box is background.
        let inked: f64 = img.pixels.sum();
        let bitmap_inked = bitmap.iter().filter(|&&b| b).count() as f64 * 4.0;
        assert_eq!(inked, bitmap_inked);
    }

    #[test]
    fn deterministic_per_seed() {
        let font = builtin();
        let style = DistortionParams {
            noise_sigma: 0.1,
            occlusion_prob: 0.5,
            blur_radius: 1,
            jitter_px: 1,
            ..DistortionParams::none()
        };
        let a = render_word("cat", &font, Geometry::default(), &style, 7).unwrap();
        let b = render_word("cat", &font, Geometry::default(), &style, 7).unwrap();
        assert_eq!(a.pixels, b.pixels);
    }

    #[test]
    fn different_seeds_differ_but_share_label() {
        let font = builtin();
        let style = DistortionParams { noise_sigma: 0.1, ..DistortionParams::none() };
        let a = render_word("cat", &font, Geometry::default(), &style, 1).unwrap();
        let b = render_word("cat", &font, Geometry::default(), &style, 2).unwrap();
        assert_ne!(a.pixels, b.pixels);
        assert_eq!(a.label, b.label);
    }

    #[test]
    fn pixels_stay_in_unit_interval() {
        let font = builtin();
        let style = DistortionParams {
            noise_sigma: 0.5,
            blur_radius: 2,
            occlusion_prob: 1.0,
            ..DistortionParams::none()
        };
        for seed in 0..20 {
            let img = render_word("word7", &font, Geometry::default(), &style, seed).unwrap();
            assert!(img.pixels.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn rejects_bad_chars_and_too_long() {
        let font = builtin();
        let err = render_word("caT", &font, Geometry::default(), &DistortionParams::none(), 0);
        assert!(matches!(err, Err(GlyphError::BadChar('T'))));
        let long = "a".repeat(40);
        let err = render_word(&long, &font, Geometry::default(), &DistortionParams::none(), 0);
        assert!(matches!(err, Err(GlyphError::WordTooLong(_))));
    }

    #[test]
    fn scale_clamps_to_fit() {
        let font = builtin();
        // 10 chars at requested scale 4 cannot fit 96px; must clamp, not fail.
        let style = DistortionParams { scale: 4, ..DistortionParams::none() };
        let img = render_word("abcdefghij", &font, Geometry::default(), &style, 0).unwrap();
        assert_eq!(img.label.len(), 10);
        assert!(img.pixels.iter().any(|&v| v > 0.0));
    }
}
