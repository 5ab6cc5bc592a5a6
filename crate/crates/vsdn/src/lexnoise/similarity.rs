//! Visual character-similarity matrix.
//!
//! Cosine similarities between classifier weight rows (or glyph bitmaps
//! as a proxy), diagonal zeroed, sharpened by a temperature softmax into
//! a row-stochastic confusion distribution.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::charset::{self, N_VIS};
use crate::glyphforge::GlyphFont;
use crate::netcore::linalg::softmax_inplace;
use super::NoiseError;

/// Default softmax temperature.
pub const DEFAULT_K: f64 = 3.0;

/// Row-stochastic character-confusion distribution.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    /// Row-stochastic confusion matrix.
    pub s: Array2<f64>,
    /// Raw cosine matrix with zeroed diagonal.
    pub s0: Array2<f64>,
    pub k: f64,
    /// Where the weight rows came from.
    pub source: String,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    /// Sample a character index from row `i`'s distribution.
    pub fn sample_row(&self, i: usize, u: f64) -> usize {
        let row = self.s.row(i);
        let mut acc = 0.0;
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        row.len() - 1
    }

    fn check(&self) -> Result<(), NoiseError> {
        let n = self.n();
        for i in 0..n {
            let sum: f64 = self.s.row(i).sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(NoiseError::MatrixFormat(format!("row {i} sums to {sum}")));
            }
            if self.s.row(i).iter().any(|&v| v <= 0.0) {
                return Err(NoiseError::MatrixFormat(format!("row {i} has a non-positive entry")));
            }
            if self.s0[(i, i)] != 0.0 {
                return Err(NoiseError::MatrixFormat(format!("S0 diagonal {i} not zero")));
            }
            for j in 0..n {
                if self.s0[(i, j)] != self.s0[(j, i)] {
                    return Err(NoiseError::MatrixFormat(format!("S0 not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }
}

fn row_label(i: usize, n: usize) -> String {
    if n == N_VIS {
        format!("{:?}", charset::index_char(i))
    } else {
        format!("#{i}")
    }
}

/// Build the similarity matrix from classifier weight rows (one row per
/// character, any feature width).
pub fn build_similarity(
    weights: &Array2<f64>,
    k: f64,
    source: &str,
) -> Result<SimilarityMatrix, NoiseError> {
    let n = weights.nrows();
    if n < 2 {
        return Err(NoiseError::TooFewRows(n));
    }
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(NoiseError::NonFiniteWeights);
    }
    let norms: Vec<f64> = (0..n).map(|i| weights.row(i).dot(&weights.row(i)).sqrt()).collect();
    for (i, &nm) in norms.iter().enumerate() {
        if nm == 0.0 {
            return Err(NoiseError::ZeroNormRow(row_label(i, n)));
        }
    }
    let mut s0 = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let c = weights.row(i).dot(&weights.row(j)) / (norms[i] * norms[j]);
            s0[(i, j)] = c;
            s0[(j, i)] = c;
        }
    }
    let mut s = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let mut row: Array1<f64> = s0.row(i).mapv(|v| k * v);
        softmax_inplace(row.as_slice_mut().unwrap());
        s.row_mut(i).assign(&row);
    }
    let m = SimilarityMatrix { s, s0, k, source: source.into() };
    m.check()?;
    Ok(m)
}

/// Proxy similarity from the font's flattened glyph bitmaps, used before
/// any trained classifier exists.
pub fn glyph_proxy_similarity(font: &GlyphFont, k: f64) -> Result<SimilarityMatrix, NoiseError> {
    let d = font.cell_width * font.cell_height;
    let mut w = Array2::<f64>::zeros((N_VIS, d));
    for i in 0..N_VIS {
        w.row_mut(i).assign(&Array1::from_vec(font.bitmap_f64(i)));
    }
    build_similarity(&w, k, &format!("glyph-proxy:{}", font.name))
}

/// Serialize as a text header plus dense float rows.
pub fn save_similarity(m: &SimilarityMatrix, path: &Path) -> Result<(), NoiseError> {
    let mut out = String::new();
    writeln!(out, "sim-matrix v1").unwrap();
    writeln!(out, "n = {}", m.n()).unwrap();
    writeln!(out, "k = {}", m.k).unwrap();
    writeln!(out, "source = {}", m.source).unwrap();
    if m.n() == N_VIS {
        let cs: String = charset::CHARS.iter().collect();
        writeln!(out, "charset = {cs}").unwrap();
    }
    for name in ["S0", "S"] {
        writeln!(out, "{name}").unwrap();
        let mat = if name == "S0" { &m.s0 } else { &m.s };
        for i in 0..m.n() {
            let row: Vec<String> = mat.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
    }
    std::fs::write(path, out).map_err(|e| NoiseError::Io(path.display().to_string(), e))
}

/// Load a matrix written by [`save_similarity`].
pub fn load_similarity(path: &Path) -> Result<SimilarityMatrix, NoiseError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| NoiseError::Io(path.display().to_string(), e))?;
    let bad = |m: String| NoiseError::MatrixFormat(m);
    let mut lines = text.lines();
    if lines.next() != Some("sim-matrix v1") {
        return Err(bad("missing sim-matrix header".into()));
    }
    let mut n = 0usize;
    let mut k = DEFAULT_K;
    let mut source = String::new();
    let mut line = lines.next();
    while let Some(l) = line {
        if l == "S0" {
            break;
        }
        if let Some((key, val)) = l.split_once('=') {
            match key.trim() {
                "n" => n = val.trim().parse().map_err(|_| bad("bad n".into()))?,
                "k" => k = val.trim().parse().map_err(|_| bad("bad k".into()))?,
                "source" => source = val.trim().to_string(),
                "charset" => {}
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        line = lines.next();
    }
    if n == 0 {
        return Err(bad("missing n".into()));
    }
    let read_matrix = |lines: &mut std::str::Lines| -> Result<Array2<f64>, NoiseError> {
        let mut m = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            let l = lines.next().ok_or_else(|| bad("truncated matrix".into()))?;
            let vals: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(format!("bad float on row {i}")))?;
            if vals.len() != n {
                return Err(bad(format!("row {i} has {} entries, expected {n}", vals.len())));
            }
            m.row_mut(i).assign(&Array1::from_vec(vals));
        }
        Ok(m)
    };
    let s0 = read_matrix(&mut lines)?;
    if lines.next() != Some("S") {
        return Err(bad("missing S section".into()));
    }
    let s = read_matrix(&mut lines)?;
    let m = SimilarityMatrix { s, s0, k, source };
    m.check()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_rows_have_maximal_cosine() {
        let w = array![[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [3.0, -1.0, 0.5]];
        let m = build_similarity(&w, DEFAULT_K, "t").unwrap();
        assert!((m.s0[(0, 1)] - 1.0).abs() < 1e-12);
        for j in 0..3 {
            assert!(m.s0[(0, 1)] >= m.s0[(0, j)]);
            assert!(m.s0[(1, 0)] >= m.s0[(1, j)]);
        }
    }

    #[test]
    fn hand_evaluated_three_character_case() {
        // Rows (1,0), (0,1), (1,1): off-diagonal cosines {0, 1/sqrt(2), 1/sqrt(2)}.
        let w = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let m = build_similarity(&w, 3.0, "t").unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        assert!((m.s0[(0, 1)] - 0.0).abs() < 1e-12);
        assert!((m.s0[(0, 2)] - r).abs() < 1e-12);
        assert!((m.s0[(1, 2)] - r).abs() < 1e-12);
        // Row 0 softmax over [0, 0, 3r]:
        let e = (3.0 * r).exp();
        let z = 2.0 + e;
        assert!((m.s[(0, 0)] - 1.0 / z).abs() < 1e-12);
        assert!((m.s[(0, 1)] - 1.0 / z).abs() < 1e-12);
        assert!((m.s[(0, 2)] - e / z).abs() < 1e-12);
        // Row 2 softmax over [3r, 3r, 0]:
        let z2 = 2.0 * e + 1.0;
        assert!((m.s[(2, 0)] - e / z2).abs() < 1e-12);
        assert!((m.s[(2, 2)] - 1.0 / z2).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_norm_and_non_finite() {
        let w = array![[0.0, 0.0], [1.0, 0.0]];
        match build_similarity(&w, 3.0, "t") {
            Err(NoiseError::ZeroNormRow(label)) => assert_eq!(label, "#0"),
            other => panic!("expected zero-norm error, got {other:?}"),
        }
        let w = array![[f64::NAN, 0.0], [1.0, 0.0]];
        assert!(matches!(build_similarity(&w, 3.0, "t"), Err(NoiseError::NonFiniteWeights)));
    }

    #[test]
    fn zero_norm_error_names_the_character() {
        let font = GlyphFont::builtin();
        let d = font.cell_width * font.cell_height;
        let mut w = Array2::<f64>::zeros((N_VIS, d));
        for i in 0..N_VIS {
            w.row_mut(i).assign(&Array1::from_vec(font.bitmap_f64(i)));
        }
        w.row_mut(charset::char_index('q').unwrap()).fill(0.0);
        match build_similarity(&w, 3.0, "t") {
            Err(NoiseError::ZeroNormRow(label)) => assert_eq!(label, "'q'"),
            other => panic!("expected zero-norm error, got {other:?}"),
        }
    }

    #[test]
    fn glyph_proxy_invariants() {
        let m = glyph_proxy_similarity(&GlyphFont::builtin(), DEFAULT_K).unwrap();
        assert_eq!(m.n(), N_VIS);
        for i in 0..N_VIS {
            let sum: f64 = m.s.row(i).sum();
            assert!((sum - 1.0).abs() <= 1e-6);
            assert!(m.s.row(i).iter().all(|&v| v > 0.0));
            assert_eq!(m.s0[(i, i)], 0.0);
            for j in 0..N_VIS {
                assert_eq!(m.s0[(i, j)], m.s0[(j, i)]);
            }
        }
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sim.txt");
        let m = glyph_proxy_similarity(&GlyphFont::builtin(), DEFAULT_K).unwrap();
        save_similarity(&m, &p).unwrap();
        let back = load_similarity(&p).unwrap();
        assert_eq!(back.k, m.k);
        assert_eq!(back.source, m.source);
        assert_eq!(back.s, m.s);
        assert_eq!(back.s0, m.s0);
    }
}
