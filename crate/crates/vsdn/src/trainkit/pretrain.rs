//! Word-correction pre-training of the semantic module.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lexnoise::CorrectionPair;
use crate::netcore::checkpoint::{save_checkpoint, SEMANTIC_PREFIX};
use crate::netcore::{Model, ModelConfig, Params};
use crate::seeds::derive_seed;
use super::optim::{lr_multiplier, Optimizer};
use super::{TrainConfig, TrainError};

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub checkpoint: PathBuf,
    /// Mean correction loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Train SE + SD (+ the semantic head and the shared embedding) on
/// corrupted/target pairs; everything outside the semantic module stays
/// at initialization. The checkpoint holds only the semantic subset.
///
/// With `epochs = 0` the checkpoint echoes the initialization. On
/// divergence the last completed epoch's checkpoint stays on disk.
pub fn pretrain_semantic(
    pairs: &[CorrectionPair],
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    out_path: &Path,
) -> Result<PretrainOutcome, TrainError> {
    if pairs.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if cfg.batch_size == 0 {
        return Err(TrainError::Config("batch_size must be >= 1".into()));
    }
    model_cfg.validate()?;
    for p in pairs {
        let len = p.target.chars().count();
        if len == 0 || len + 1 > model_cfg.t_max {
            return Err(TrainError::BadLabel {
                label: p.target.clone(),
                reason: format!("target length {len} outside [1, {}]", model_cfg.t_max - 1),
            });
        }
    }

    let mut model = Model::new(model_cfg.clone(), cfg.seed)?;
    let mut opt = Optimizer::new(cfg.optimizer, model_cfg);
    let schedule = cfg.schedule();
    let save_meta = |epoch: usize| {
        vec![
            ("seed".to_string(), cfg.seed.to_string()),
            ("epoch".to_string(), epoch.to_string()),
            ("task".to_string(), "word-correction".to_string()),
        ]
    };
    save_checkpoint(out_path, model_cfg, &model.params, &save_meta(0), Some(SEMANTIC_PREFIX))?;

    let non_semantic_snapshot: Vec<(String, Vec<f64>)> = model
        .params
        .fields()
        .into_iter()
        .filter(|(n, _)| !n.starts_with(SEMANTIC_PREFIX))
        .map(|(n, v)| (n, v.as_slice().to_vec()))
        .collect();

    let mut indices: Vec<usize> = (0..pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x9e7, epoch as u64]));
        indices.shuffle(&mut rng);
        let lr_scale = lr_multiplier(&schedule, epoch);
        let mut epoch_loss = 0.0;
        for batch in indices.chunks(cfg.batch_size) {
            let mut grads = Params::zeros(model_cfg);
            let mut ok = 0usize;
            for &i in batch {
                let pair = &pairs[i];
                let step = match model.sem_train_forward(&pair.corrupted, &pair.target) {
                    Ok(s) => s,
                    Err(crate::netcore::NetError::NonFinite { branch }) => {
                        return Err(TrainError::Diverged { epoch, branch });
                    }
                    Err(e) => return Err(e.into()),
                };
                epoch_loss += step.loss;
                model.sem_train_backward(&step, &mut grads);
                ok += 1;
            }
            grads.scale(1.0 / ok as f64);
            opt.step(&mut model.params, &grads, lr_scale);
            if !model.params.all_finite() {
                return Err(TrainError::Diverged { epoch, branch: "semantic" });
            }
        }
        epoch_losses.push(epoch_loss / pairs.len() as f64);
        save_checkpoint(
            out_path,
            model_cfg,
            &model.params,
            &save_meta(epoch),
            Some(SEMANTIC_PREFIX),
        )?;
    }

    // Pre-training must not have touched anything outside the module.
    for (name, v) in model.params.fields() {
        if name.starts_with(SEMANTIC_PREFIX) {
            continue;
        }
        let snap = &non_semantic_snapshot.iter().find(|(n, _)| *n == name).unwrap().1;
        debug_assert_eq!(v.as_slice(), snap.as_slice(), "{name} drifted during pre-training");
    }

    Ok(PretrainOutcome { checkpoint: out_path.to_path_buf(), epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glyphforge::{GlyphFont, Vocabulary};
    use crate::lexnoise::{glyph_proxy_similarity, make_correction_corpus, CorruptionConfig};
    use crate::netcore::checkpoint::load_into;

    fn toy_pairs(n_words: usize, ppw: usize, seed: u64) -> Vec<CorrectionPair> {
        let words: Vec<String> = Vocabulary::bundled()
            .words()
            .iter()
            .filter(|w| w.len() <= 3)
            .take(n_words)
            .cloned()
            .collect();
        let vocab = Vocabulary::from_words(words.iter(), "t").unwrap();
        let sim = glyph_proxy_similarity(&GlyphFont::builtin(), 3.0).unwrap();
        let cfg = CorruptionConfig { seed, ..Default::default() };
        make_correction_corpus(&vocab, ppw, &sim, &cfg).unwrap()
    }

    #[test]
    fn zero_epochs_checkpoint_equals_initialization() {
        let dir = tempfile::tempdir().unwrap();
        let model_cfg = ModelConfig::tiny();
        let cfg = TrainConfig { epochs: 0, seed: 5, ..Default::default() };
        let pairs = toy_pairs(10, 2, 1);
        let path = dir.path().join("sem.ckpt");
        let out = pretrain_semantic(&pairs, &model_cfg, &cfg, &path).unwrap();
        assert!(out.epoch_losses.is_empty());

        let reference = Params::init(&model_cfg, 5);
        let mut loaded = Params::init(&model_cfg, 5);
        load_into(&mut loaded, &model_cfg, &path, SEMANTIC_PREFIX).unwrap();
        for ((name, a), (_, b)) in loaded.fields().into_iter().zip(reference.fields()) {
            if name.starts_with(SEMANTIC_PREFIX) {
                let expect: Vec<f64> = b.as_slice().iter().map(|&v| v as f32 as f64).collect();
                assert_eq!(a.as_slice(), expect.as_slice(), "{name}");
            }
        }
    }

    #[test]
    fn identity_pairs_overfit_to_near_perfect_top1() {
        // With all corruption probabilities zero every pair is
        // (word, word); a 100-word toy vocabulary must be memorized
        // within 50 epochs.
        let dir = tempfile::tempdir().unwrap();
        // Tiny visual side, semantic side wide enough to memorize.
        let model_cfg = ModelConfig {
            sem_dim: 48,
            embed_dim: 32,
            ..ModelConfig::tiny()
        };
        let words: Vec<String> = Vocabulary::bundled()
            .words()
            .iter()
            .filter(|w| w.len() <= 3)
            .take(100)
            .cloned()
            .collect();
        let vocab = Vocabulary::from_words(words.iter(), "toy").unwrap();
        let sim = glyph_proxy_similarity(&GlyphFont::builtin(), 3.0).unwrap();
        let cfg = CorruptionConfig {
            p_replace: 0.0,
            p_insert: 0.0,
            p_delete: 0.0,
            seed: 1,
        };
        let pairs = make_correction_corpus(&vocab, 3, &sim, &cfg).unwrap();
        assert!(pairs.iter().all(|p| p.corrupted == p.target));

        let train_cfg = TrainConfig {
            epochs: 50,
            batch_size: 32,
            seed: 2,
            optimizer: super::super::OptimizerKind::Adam {
                lr: 2e-3,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            lr_schedule: Some(Default::default()),
            ..Default::default()
        };
        let path = dir.path().join("sem.ckpt");
        pretrain_semantic(&pairs, &model_cfg, &train_cfg, &path).unwrap();

        let mut params = Params::init(&model_cfg, train_cfg.seed);
        load_into(&mut params, &model_cfg, &path, SEMANTIC_PREFIX).unwrap();
        let model = crate::netcore::Model::from_parts(model_cfg, params).unwrap();
        let eval_pairs: Vec<(String, String)> =
            vocab.words().iter().map(|w| (w.clone(), w.clone())).collect();
        let accs = crate::evalbench::correction_topk(&model, &eval_pairs, &[1]);
        assert!(accs[0] > 0.99, "top-1 {:.3} on identity pairs", accs[0]);
    }

    #[test]
    fn loss_decreases_and_non_semantic_groups_stay_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let model_cfg = ModelConfig::tiny();
        let cfg = TrainConfig {
            epochs: 4,
            batch_size: 16,
            seed: 3,
            ..Default::default()
        };
        let pairs = toy_pairs(30, 4, 2);
        let path = dir.path().join("sem.ckpt");
        let out = pretrain_semantic(&pairs, &model_cfg, &cfg, &path).unwrap();
        assert_eq!(out.epoch_losses.len(), 4);
        assert!(
            out.epoch_losses[3] < out.epoch_losses[0],
            "losses {:?}",
            out.epoch_losses
        );
        // Loading the checkpoint into a fresh init changes only sem.*.
        let mut target = Params::init(&model_cfg, 99);
        let before: Vec<(String, Vec<f64>)> = target
            .fields()
            .into_iter()
            .map(|(n, v)| (n, v.as_slice().to_vec()))
            .collect();
        load_into(&mut target, &model_cfg, &path, SEMANTIC_PREFIX).unwrap();
        for (name, v) in target.fields() {
            let snap = &before.iter().find(|(n, _)| *n == name).unwrap().1;
            if !name.starts_with(SEMANTIC_PREFIX) {
                assert_eq!(v.as_slice(), snap.as_slice(), "{name} changed");
            }
        }
    }
}
