//! Synthetic word-image generation with controllable vocabulary.

mod dataset;
mod font;
mod render;
mod vocab;

pub use dataset::{
    dataset_digest, read_pgm, synthesize_dataset, write_pgm, Dataset, DatasetManifest,
    GrayImage, ManifestEntry, Split, TestSpec,
};
pub(crate) use dataset::hex_digest;
pub use font::GlyphFont;
pub use render::{render_word, DistortionParams, Geometry, RenderMeta, StyleRanges, TextImage};
pub use vocab::{build_vocab_subset, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum GlyphError {
    #[error("character {0:?} is outside the charset")]
    BadChar(char),
    #[error("empty word")]
    EmptyWord,
    #[error("word {0:?} does not fit the image geometry")]
    WordTooLong(String),
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error("samples per word must be >= 1")]
    BadSampleCount,
    #[error("output directory {0} already exists")]
    OutputExists(String),
    #[error("glyphs for {0:?} and {1:?} are identical")]
    DuplicateGlyphs(char, char),
    #[error("font format: {0}")]
    FontFormat(String),
    #[error("manifest format: {0}")]
    ManifestFormat(String),
    #[error("{0}: not a valid PGM ({1})")]
    PgmFormat(String, String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
