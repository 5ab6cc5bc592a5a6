//! Vocabulary management: the bundled word list, file ingest, subsets.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charset;
use super::GlyphError;

const BUNDLED: &str = include_str!("../../assets/words.txt");

/// An ordered list of unique lowercase alphanumeric words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    pub source: String,
}

impl Vocabulary {
    /// Build from raw words: lowercases, validates the charset, dedupes
    /// keeping first occurrence.
    pub fn from_words<I, S>(words: I, source: &str) -> Result<Self, GlyphError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if w.is_empty() {
                continue;
            }
            if let Err(c) = charset::encode_label(&w) {
                return Err(GlyphError::BadChar(c));
            }
            if seen.insert(w.clone()) {
                out.push(w);
            }
        }
        if out.is_empty() {
            return Err(GlyphError::EmptyVocabulary);
        }
        Ok(Vocabulary { words: out, source: source.into() })
    }

    /// The bundled English list (~10k words).
    pub fn bundled() -> Self {
        Self::from_words(BUNDLED.lines(), "bundled").expect("bundled list is valid")
    }

    /// Load a one-word-per-line UTF-8 file, lowercasing on ingest.
    pub fn load(path: &Path) -> Result<Self, GlyphError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GlyphError::Io(path.display().to_string(), e))?;
        Self::from_words(text.lines(), &path.display().to_string())
    }

    /// Write one word per line.
    pub fn save(&self, path: &Path) -> Result<(), GlyphError> {
        let mut text = self.words.join("\n");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| GlyphError::Io(path.display().to_string(), e))
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.iter().any(|w| w == word)
    }

    /// Drop words longer than `max_len` characters.
    pub fn filter_max_len(&self, max_len: usize) -> Result<Self, GlyphError> {
        Self::from_words(
            self.words.iter().filter(|w| w.chars().count() <= max_len),
            &format!("{} (len<={max_len})", self.source),
        )
    }

    /// Keep words a `t_max`-step decoder can be trained on: the label
    /// plus EoS must fit, and the blank-separated alignment must fit
    /// (adjacent repeated characters each cost an extra frame).
    pub fn filter_decodable(&self, t_max: usize) -> Result<Self, GlyphError> {
        let fits = |w: &str| {
            let chars: Vec<char> = w.chars().collect();
            let repeats = chars.windows(2).filter(|p| p[0] == p[1]).count();
            chars.len() + 1 <= t_max && chars.len() + repeats <= t_max
        };
        Self::from_words(
            self.words.iter().filter(|w| fits(w)),
            &format!("{} (t_max={t_max})", self.source),
        )
    }

    /// Append `n` random digit strings of the given length range.
    pub fn with_digit_strings(&self, n: usize, len: (usize, usize), seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut words = self.words.clone();
        let mut seen: std::collections::HashSet<String> = words.iter().cloned().collect();
        let mut added = 0;
        while added < n {
            let l = rng.random_range(len.0..=len.1);
            let s: String = (0..l)
                .map(|_| char::from(b'0' + rng.random_range(0..10u8)))
                .collect();
            if seen.insert(s.clone()) {
                words.push(s);
                added += 1;
            }
        }
        Vocabulary { words, source: format!("{}+digits", self.source) }
    }
}

/// Uniform random subset of `round(fraction * |base|)` words, base order
/// preserved, deterministic per seed.
pub fn build_vocab_subset(
    base: &Vocabulary,
    fraction: f64,
    seed: u64,
) -> Result<Vocabulary, GlyphError> {
    if base.is_empty() {
        return Err(GlyphError::EmptyVocabulary);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(GlyphError::BadFraction(fraction));
    }
    let count = (fraction * base.len() as f64).round() as usize;
    if count == 0 {
        return Err(GlyphError::EmptyVocabulary);
    }
    if count == base.len() {
        return Ok(Vocabulary {
            words: base.words.clone(),
            source: format!("{} (100%)", base.source),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..base.len()).collect();
    indices.shuffle(&mut rng);
    let mut chosen: Vec<usize> = indices.into_iter().take(count).collect();
    chosen.sort_unstable();
    let words = chosen.iter().map(|&i| base.words[i].clone()).collect();
    Ok(Vocabulary {
        words,
        source: format!("{} ({:.0}%, seed {seed})", base.source, fraction * 100.0),
    })
}
