//! Model mathematics: feature extraction, the CTC branch, the semantic
//! module, the attention-based visual decoder, fusion and the four-term
//! training objective, all with exact analytic gradients.

pub mod checkpoint;
pub mod ctc;
pub mod extractor;
pub mod gru;
pub mod layers;
pub mod linalg;
mod model;
mod params;

pub use ctc::{ctc_greedy_decode, ctc_loss, ctc_loss_indices};
pub use model::{
    BranchLosses, DecodeMode, DecodeTrace, LossWeights, Model, SemTrainStep, TraceStep,
    TrainStep,
};
pub use params::{ModelConfig, ParamView, ParamViewMut, Params, QueryMode};

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("shape: {0}")]
    Shape(String),
    #[error("character {0:?} is outside the charset")]
    BadChar(char),
    #[error("label is empty")]
    EmptyLabel,
    #[error("label length {len} exceeds decoder capacity {max}")]
    LabelTooLong { len: usize, max: usize },
    #[error("label needs {needed} frames but only {have} are available")]
    CtcInfeasible { needed: usize, have: usize },
    #[error("image is {actual:?}, model expects {expected:?}")]
    GeometryMismatch { expected: (usize, usize), actual: (usize, usize) },
    #[error("symbol index {0} outside the embedding table")]
    UnknownSymbol(usize),
    #[error("non-finite loss in {branch} branch")]
    NonFinite { branch: &'static str },
    #[error("loss requires a teacher-forced trace")]
    NeedTeacherForced,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
