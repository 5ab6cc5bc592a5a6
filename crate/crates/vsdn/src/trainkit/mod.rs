//! Training: word-correction pre-training of the semantic module, joint
//! optimization of the full network, and gradient verification.

mod gradcheck;
mod joint;
mod optim;
mod pretrain;

pub use gradcheck::{gradient_check, GradCheckReport, GroupReport};
pub use joint::{render_epochs, train_joint, EpochRecord, TrainOutcome};
pub use optim::{default_decay_schedule, lr_multiplier, Optimizer, OptimizerKind};
pub use pretrain::{pretrain_semantic, PretrainOutcome};

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::netcore::LossWeights;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Net(#[from] crate::netcore::NetError),
    #[error(transparent)]
    Glyph(#[from] crate::glyphforge::GlyphError),
    #[error(transparent)]
    Noise(#[from] crate::lexnoise::NoiseError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("training diverged in epoch {epoch}: non-finite {branch} loss")]
    Diverged { epoch: usize, branch: &'static str },
    #[error("label {label:?} cannot be trained: {reason}")]
    BadLabel { label: String, reason: String },
    #[error("dataset has no trainable entries")]
    EmptyDataset,
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

/// Knobs for pre-training and joint training.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    /// 1-based epoch to learning-rate multiplier; `None` applies the
    /// default tenfold decays at 2/3 and 5/6 of the run.
    pub lr_schedule: Option<BTreeMap<usize, f64>>,
    pub seed: u64,
    pub loss_weights: LossWeights,
    /// Probability of feeding the gold previous character during decoding.
    pub tf_ratio: f64,
    /// Semantic-module checkpoint to initialize from.
    pub sem_init: Option<PathBuf>,
    /// Keep the semantic module fixed during joint training.
    pub freeze_semantic: bool,
    /// Probability of feeding a corrupted ground-truth word (instead of
    /// the online coarse prediction) into the semantic encoder.
    pub se_corrupt_gt_prob: f64,
    /// Fraction of training images held out for validation.
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            epochs: 6,
            optimizer: OptimizerKind::default(),
            lr_schedule: None,
            seed: 0,
            loss_weights: LossWeights::default(),
            tf_ratio: 1.0,
            sem_init: None,
            freeze_semantic: false,
            se_corrupt_gt_prob: 0.5,
            val_fraction: 0.05,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be >= 1".into()));
        }
        if let Some(s) = &self.lr_schedule {
            if s.keys().any(|&e| e == 0 || e > self.epochs) {
                return Err(TrainError::Config(format!(
                    "schedule keys must lie in [1, {}]",
                    self.epochs
                )));
            }
        }
        for (name, p) in [
            ("tf_ratio", self.tf_ratio),
            ("se_corrupt_gt_prob", self.se_corrupt_gt_prob),
            ("val_fraction", self.val_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(TrainError::Config(format!("{name} must be in [0, 1]")));
            }
        }
        self.loss_weights.validate()?;
        Ok(())
    }

    pub fn schedule(&self) -> BTreeMap<usize, f64> {
        self.lr_schedule.clone().unwrap_or_else(|| default_decay_schedule(self.epochs))
    }
}
