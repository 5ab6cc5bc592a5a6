//! Metrics, vocabulary-reliance evaluation, component analysis, ablation
//! orchestration and attention export.

mod ablate;
mod attention_export;
mod beam;
mod metrics;
mod report;

pub use ablate::{run_ablation, AblationOutcome, AblationRow, AblationSuite};
pub use attention_export::{export_attention, AttentionExport};
pub use beam::{correction_topk, sd_beam_search, Hypothesis};
pub use metrics::{normalize, split_by_vocab, word_accuracy};
pub use report::{evaluate_model, topk_semantic, EvalReport, SplitStat};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("prediction/label lists have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("nothing to evaluate")]
    Empty,
    #[error("report inconsistency: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Net(#[from] crate::netcore::NetError),
    #[error(transparent)]
    Glyph(#[from] crate::glyphforge::GlyphError),
    #[error("variant {0} failed to train: {1}")]
    Train(String, String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
