//! Word-level accuracy and vocabulary splits.

use crate::glyphforge::Vocabulary;
use super::EvalError;

/// Case-insensitive alphanumeric normalization used by every accuracy.
pub fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Fraction of exact matches after normalization.
pub fn word_accuracy(predictions: &[String], labels: &[String]) -> Result<f64, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), labels.len()));
    }
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| normalize(p) == normalize(l))
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Partition label indices into in-vocabulary and out-of-vocabulary by
/// normalized string equality.
pub fn split_by_vocab(labels: &[String], vocab: &Vocabulary) -> (Vec<usize>, Vec<usize>) {
    let set: std::collections::HashSet<String> =
        vocab.words().iter().map(|w| normalize(w)).collect();
    let mut invoc = Vec::new();
    let mut outvoc = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        if set.contains(&normalize(l)) {
            invoc.push(i);
        } else {
            outvoc.push(i);
        }
    }
    (invoc, outvoc)
}
