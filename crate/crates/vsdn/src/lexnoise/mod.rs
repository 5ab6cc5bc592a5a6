//! Character-confusion modeling and corrupted/target word pairs for the
//! correction pre-training task.

mod corrupt;
mod similarity;

pub use corrupt::{
    corrupt_word, load_corpus, make_correction_corpus, save_corpus, CorrectionPair,
    CorruptionConfig, EditOp,
};
pub use similarity::{
    build_similarity, glyph_proxy_similarity, load_similarity, save_similarity,
    SimilarityMatrix, DEFAULT_K,
};

#[derive(Debug, thiserror::Error)]
pub enum NoiseError {
    #[error("need at least 2 weight rows, got {0}")]
    TooFewRows(usize),
    #[error("weights contain non-finite values")]
    NonFiniteWeights,
    #[error("weight row for {0} has zero norm")]
    ZeroNormRow(String),
    #[error("similarity matrix has {0} rows, corruption needs 36")]
    WrongMatrixSize(usize),
    #[error("character {0:?} is outside the charset")]
    BadChar(char),
    #[error("cannot corrupt an empty word")]
    EmptyWord,
    #[error("corruption probabilities must be non-negative and sum to <= 1")]
    BadProbabilities,
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("pairs per word must be >= 1")]
    BadPairCount,
    #[error("similarity matrix format: {0}")]
    MatrixFormat(String),
    #[error("correction corpus format: {0}")]
    CorpusFormat(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
