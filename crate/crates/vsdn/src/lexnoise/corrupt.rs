//! Word corruption for the correction pre-training task.
//!
//! Each word receives at most one edit: replacement (visually-confusable
//! substitute), insertion (confusable with a neighbor), deletion, or none.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charset;
use crate::glyphforge::Vocabulary;
use crate::seeds::derive_seed;
use super::{NoiseError, SimilarityMatrix};

/// Edit-operation probabilities. The remaining mass keeps the word intact.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionConfig {
    pub p_replace: f64,
    pub p_insert: f64,
    pub p_delete: f64,
    pub seed: u64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        CorruptionConfig { p_replace: 0.40, p_insert: 0.10, p_delete: 0.15, seed: 0 }
    }
}

impl CorruptionConfig {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let ps = [self.p_replace, self.p_insert, self.p_delete];
        if ps.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(NoiseError::BadProbabilities);
        }
        if ps.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(NoiseError::BadProbabilities);
        }
        Ok(())
    }
}

/// The edit applied to produce a corrupted string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Replace(usize),
    Insert(usize),
    Delete(usize),
    Identity,
}

impl EditOp {
    pub fn tag(&self) -> String {
        match self {
            EditOp::Replace(p) => format!("replace@{p}"),
            EditOp::Insert(p) => format!("insert@{p}"),
            EditOp::Delete(p) => format!("delete@{p}"),
            EditOp::Identity => "identity".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self, NoiseError> {
        if s == "identity" {
            return Ok(EditOp::Identity);
        }
        let (name, pos) = s
            .split_once('@')
            .ok_or_else(|| NoiseError::CorpusFormat(format!("bad op tag {s:?}")))?;
        let pos: usize = pos
            .parse()
            .map_err(|_| NoiseError::CorpusFormat(format!("bad op position in {s:?}")))?;
        match name {
            "replace" => Ok(EditOp::Replace(pos)),
            "insert" => Ok(EditOp::Insert(pos)),
            "delete" => Ok(EditOp::Delete(pos)),
            other => Err(NoiseError::CorpusFormat(format!("unknown op {other:?}"))),
        }
    }
}

/// One training pair for the correction task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionPair {
    pub corrupted: String,
    pub target: String,
    pub op: EditOp,
}

/// Apply at most one probabilistic edit to `word`.
///
/// Replacement picks a uniform position and samples the substitute from
/// that character's similarity row (the row includes a small self mass,
/// so a replacement may reproduce the original character). Insertion
/// samples from the left neighbor's row (right neighbor at position 0).
/// Deletion is disabled for single-character words; its mass moves to
/// replacement.
pub fn corrupt_word(
    word: &str,
    sim: &SimilarityMatrix,
    cfg: &CorruptionConfig,
    rng: &mut impl Rng,
) -> Result<CorrectionPair, NoiseError> {
    if word.is_empty() {
        return Err(NoiseError::EmptyWord);
    }
    if sim.n() != charset::N_VIS {
        return Err(NoiseError::WrongMatrixSize(sim.n()));
    }
    cfg.validate()?;
    let indices = charset::encode_label(word).map_err(NoiseError::BadChar)?;
    let len = indices.len();

    let u: f64 = rng.random();
    let replace_band = cfg.p_replace;
    let insert_band = replace_band + cfg.p_insert;
    let delete_band = insert_band + cfg.p_delete;

    let op = if u < replace_band {
        Op::Replace
    } else if u < insert_band {
        Op::Insert
    } else if u < delete_band {
        // Deleting the only character would leave nothing to encode.
        if len == 1 {
            Op::Replace
        } else {
            Op::Delete
        }
    } else {
        Op::Identity
    };

    let (corrupted, op) = match op {
        Op::Replace => {
            let pos = rng.random_range(0..len);
            let new = sim.sample_row(indices[pos], rng.random());
            let mut out = indices.clone();
            out[pos] = new;
            (charset::decode_label(&out), EditOp::Replace(pos))
        }
        Op::Insert => {
            let pos = rng.random_range(0..=len);
            let neighbor = if pos == 0 { indices[0] } else { indices[pos - 1] };
            let new = sim.sample_row(neighbor, rng.random());
            let mut out = indices.clone();
            out.insert(pos, new);
            (charset::decode_label(&out), EditOp::Insert(pos))
        }
        Op::Delete => {
            let pos = rng.random_range(0..len);
            let mut out = indices.clone();
            out.remove(pos);
            (charset::decode_label(&out), EditOp::Delete(pos))
        }
        Op::Identity => (word.to_string(), EditOp::Identity),
    };

    Ok(CorrectionPair { corrupted, target: word.to_string(), op })
}

enum Op {
    Replace,
    Insert,
    Delete,
    Identity,
}

/// Generate `pairs_per_word` corruption pairs per vocabulary word.
/// Deterministic per `cfg.seed` via per-pair derived RNG streams.
pub fn make_correction_corpus(
    vocab: &Vocabulary,
    pairs_per_word: usize,
    sim: &SimilarityMatrix,
    cfg: &CorruptionConfig,
) -> Result<Vec<CorrectionPair>, NoiseError> {
    if vocab.is_empty() {
        return Err(NoiseError::EmptyVocabulary);
    }
    if pairs_per_word == 0 {
        return Err(NoiseError::BadPairCount);
    }
    let mut pairs = Vec::with_capacity(vocab.len() * pairs_per_word);
    for (wi, word) in vocab.words().iter().enumerate() {
        for pi in 0..pairs_per_word {
            let idx = (wi * pairs_per_word + pi) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[idx]));
            pairs.push(corrupt_word(word, sim, cfg, &mut rng)?);
        }
    }
    Ok(pairs)
}

/// Write pairs as `corrupted<TAB>target<TAB>op` lines.
pub fn save_corpus(pairs: &[CorrectionPair], path: &Path) -> Result<(), NoiseError> {
    let mut out = String::new();
    for p in pairs {
        writeln!(out, "{}\t{}\t{}", p.corrupted, p.target, p.op.tag()).unwrap();
    }
    std::fs::write(path, out).map_err(|e| NoiseError::Io(path.display().to_string(), e))
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorrectionPair>, NoiseError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| NoiseError::Io(path.display().to_string(), e))?;
    let mut pairs = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(c), Some(t), Some(op)) => pairs.push(CorrectionPair {
                corrupted: c.to_string(),
                target: t.to_string(),
                op: EditOp::parse(op)?,
            }),
            _ => {
                return Err(NoiseError::CorpusFormat(format!(
                    "line {}: expected 3 tab-separated fields",
                    ln + 1
                )))
            }
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glyphforge::GlyphFont;
    use crate::lexnoise::glyph_proxy_similarity;

    fn sim() -> SimilarityMatrix {
        glyph_proxy_similarity(&GlyphFont::builtin(), 3.0).unwrap()
    }

    /// Reference edit distance (Wagner-Fischer), test-only oracle.
    fn levenshtein(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for i in 1..=a.len() {
            let mut cur = vec![i];
            for j in 1..=b.len() {
                let cost = usize::from(a[i - 1] != b[j - 1]);
                cur.push((prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost));
            }
            prev = cur;
        }
        prev[b.len()]
    }

    #[test]
    fn zero_probabilities_keep_word_intact() {
        let sim = sim();
        let cfg = CorruptionConfig { p_replace: 0.0, p_insert: 0.0, p_delete: 0.0, seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let p = corrupt_word("hello", &sim, &cfg, &mut rng).unwrap();
            assert_eq!(p.corrupted, "hello");
            assert_eq!(p.op, EditOp::Identity);
        }
    }

    #[test]
    fn edit_distance_matches_recorded_op() {
        let sim = sim();
        let cfg = CorruptionConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..2000 {
            let word = if i % 3 == 0 { "cat" } else { "wonder7" };
            let p = corrupt_word(word, &sim, &cfg, &mut rng).unwrap();
            let d = levenshtein(&p.corrupted, &p.target);
            match p.op {
                EditOp::Identity => assert_eq!(d, 0),
                // Replacement can draw the original character (the row
                // keeps a small self mass), in which case distance is 0.
                EditOp::Replace(_) => assert!(d <= 1),
                EditOp::Insert(_) | EditOp::Delete(_) => assert_eq!(d, 1),
            }
            if p.corrupted != p.target {
                assert_eq!(d, 1);
            }
            // Never leaves the charset.
            assert!(charset::encode_label(&p.corrupted).is_ok());
        }
    }

    #[test]
    fn single_char_words_never_deleted() {
        let sim = sim();
        let cfg = CorruptionConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut replaces = 0usize;
        let n = 20000;
        for _ in 0..n {
            let p = corrupt_word("x", &sim, &cfg, &mut rng).unwrap();
            assert!(!p.corrupted.is_empty());
            assert!(!matches!(p.op, EditOp::Delete(_)));
            if matches!(p.op, EditOp::Replace(_)) {
                replaces += 1;
            }
        }
        // Deletion mass (0.15) is reassigned to replacement: 0.55 total.
        let freq = replaces as f64 / n as f64;
        assert!((freq - 0.55).abs() < 0.02, "replace frequency {freq}");
    }

    #[test]
    fn op_frequencies_near_configured() {
        let sim = sim();
        let cfg = CorruptionConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 30000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let p = corrupt_word("street", &sim, &cfg, &mut rng).unwrap();
            let k = match p.op {
                EditOp::Replace(_) => 0,
                EditOp::Insert(_) => 1,
                EditOp::Delete(_) => 2,
                EditOp::Identity => 3,
            };
            counts[k] += 1;
        }
        let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        for (f, expect) in freqs.iter().zip([0.40, 0.10, 0.15, 0.35]) {
            assert!((f - expect).abs() < 0.02, "frequencies {freqs:?}");
        }
    }

    #[test]
    fn corpus_counts_and_determinism() {
        let vocab = Vocabulary::from_words(["cat", "dog", "mouse"], "t").unwrap();
        let sim = sim();
        let cfg = CorruptionConfig { seed: 9, ..Default::default() };
        let a = make_correction_corpus(&vocab, 5, &sim, &cfg).unwrap();
        let b = make_correction_corpus(&vocab, 5, &sim, &cfg).unwrap();
        assert_eq!(a.len(), 15);
        assert_eq!(a, b);
        // Targets cover the vocabulary.
        for w in vocab.words() {
            assert!(a.iter().any(|p| &p.target == w));
        }
        // Length stays within one edit.
        for p in &a {
            let lc = p.corrupted.chars().count() as isize;
            let lt = p.target.chars().count() as isize;
            assert!((lc - lt).abs() <= 1);
        }
    }

    #[test]
    fn corpus_mean_edit_distance_matches_expectation() {
        // Closed form: per word of length L >= 2, E[dist] =
        // p_replace * (1 - selfmass) + p_insert + p_delete, where selfmass
        // is the average self-substitution probability over the word.
        let words: Vec<String> = crate::glyphforge::Vocabulary::bundled()
            .words()
            .iter()
            .filter(|w| w.len() >= 2)
            .take(400)
            .cloned()
            .collect();
        let vocab = Vocabulary::from_words(words.iter(), "t").unwrap();
        let sim = sim();
        let cfg = CorruptionConfig { seed: 31, ..Default::default() };
        let pairs = make_correction_corpus(&vocab, 50, &sim, &cfg).unwrap();

        let mut expected = 0.0;
        for w in vocab.words() {
            let idx = charset::encode_label(w).unwrap();
            let selfmass: f64 =
                idx.iter().map(|&c| sim.s[(c, c)]).sum::<f64>() / idx.len() as f64;
            expected += cfg.p_replace * (1.0 - selfmass) + cfg.p_insert + cfg.p_delete;
        }
        expected /= vocab.len() as f64;

        let mean: f64 = pairs
            .iter()
            .map(|p| levenshtein(&p.corrupted, &p.target) as f64)
            .sum::<f64>()
            / pairs.len() as f64;
        assert!(
            (mean - expected).abs() / expected < 0.05,
            "mean {mean}, expected {expected}"
        );
    }

    #[test]
    fn corpus_tsv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pairs.tsv");
        let vocab = Vocabulary::from_words(["cat", "dog"], "t").unwrap();
        let cfg = CorruptionConfig::default();
        let pairs = make_correction_corpus(&vocab, 4, &sim(), &cfg).unwrap();
        save_corpus(&pairs, &p).unwrap();
        let back = load_corpus(&p).unwrap();
        assert_eq!(back, pairs);
    }

    #[test]
    fn empty_vocab_rejected() {
        let vocab = Vocabulary::from_words(["cat"], "t").unwrap();
        let cfg = CorruptionConfig::default();
        assert!(matches!(
            make_correction_corpus(&vocab, 0, &sim(), &cfg),
            Err(NoiseError::BadPairCount)
        ));
    }
}
