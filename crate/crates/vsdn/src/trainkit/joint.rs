//! Joint training of the full network on a synthesized dataset.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::charset;
use crate::evalbench::normalize;
use crate::glyphforge::{Dataset, GlyphFont, Split};
use crate::lexnoise::{corrupt_word, glyph_proxy_similarity, CorruptionConfig, DEFAULT_K};
use crate::netcore::checkpoint::{
    checkpoint_digest, load_into, save_checkpoint, SEMANTIC_PREFIX,
};
use crate::netcore::{ctc, DecodeMode, Model, ModelConfig, NetError, Params};
use crate::seeds::derive_seed;
use super::optim::{lr_multiplier, Optimizer};
use super::{TrainConfig, TrainError};

/// One line of the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss_ctc: f64,
    pub loss_visual: f64,
    pub loss_semantic: f64,
    pub loss_fused: f64,
    pub loss_total: f64,
    pub lr_scale: f64,
    pub val_word_acc: Option<f64>,
    pub wall_s: f64,
    pub last_checkpoint_digest: String,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best_checkpoint: PathBuf,
    pub last_checkpoint: PathBuf,
    pub manifest_path: PathBuf,
    pub epochs: Vec<EpochRecord>,
    pub best_val_acc: Option<f64>,
}

/// Optimize the four-term objective over the dataset's training split.
///
/// Deterministic per (seed, single worker): batch order, teacher-forcing
/// coin flips and the corrupted-input coin flips all derive from the
/// seed. Per-epoch records append to `run.jsonl`; `last.ckpt` and
/// `best.ckpt` (by free-running validation word accuracy) land in
/// `out_dir`.
pub fn train_joint(
    dataset: &Dataset,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    out_dir: &Path,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    model_cfg.validate()?;
    if dataset.geometry.height != model_cfg.img_h || dataset.geometry.width != model_cfg.img_w {
        return Err(TrainError::Config(format!(
            "dataset geometry {}x{} != model {}x{}",
            dataset.geometry.height, dataset.geometry.width, model_cfg.img_h, model_cfg.img_w
        )));
    }
    let train_idx_all = dataset.split_indices(Split::Train);
    if train_idx_all.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    // Every label must fit the decoder and the CTC alignment space.
    for &i in &train_idx_all {
        let label = &dataset.entries[i].label;
        let idx = charset::encode_label(label)
            .map_err(|c| TrainError::BadLabel {
                label: label.clone(),
                reason: format!("character {c:?} outside charset"),
            })?;
        if idx.len() + 1 > model_cfg.t_max {
            return Err(TrainError::BadLabel {
                label: label.clone(),
                reason: format!("length {} exceeds t_max - 1 = {}", idx.len(), model_cfg.t_max - 1),
            });
        }
        let needed = ctc::min_frames(&idx);
        if needed > model_cfg.t_max {
            return Err(TrainError::BadLabel {
                label: label.clone(),
                reason: format!("needs {needed} CTC frames, model has {}", model_cfg.t_max),
            });
        }
    }

    std::fs::create_dir_all(out_dir)
        .map_err(|e| TrainError::Io(out_dir.display().to_string(), e))?;
    let manifest_path = out_dir.join("run.jsonl");
    let mut manifest = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&manifest_path)
        .map_err(|e| TrainError::Io(manifest_path.display().to_string(), e))?;
    let header = serde_json::json!({
        "record": "config",
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "optimizer": cfg.optimizer.name(),
        "tf_ratio": cfg.tf_ratio,
        "se_corrupt_gt_prob": cfg.se_corrupt_gt_prob,
        "freeze_semantic": cfg.freeze_semantic,
        "sem_init": cfg.sem_init.as_ref().map(|p| p.display().to_string()),
        "loss_weights": [cfg.loss_weights.ctc, cfg.loss_weights.visual,
                          cfg.loss_weights.semantic, cfg.loss_weights.fused],
        "query_mode": model_cfg.query_mode.as_str(),
        "coupled_baseline": model_cfg.coupled_baseline,
        "config_digest": crate::netcore::checkpoint::config_digest(model_cfg),
        "dataset": dataset.dir.display().to_string(),
    });
    writeln!(manifest, "{header}").map_err(|e| TrainError::Io("run.jsonl".into(), e))?;

    let mut model = Model::new(model_cfg.clone(), cfg.seed)?;
    if let Some(sem) = &cfg.sem_init {
        load_into(&mut model.params, model_cfg, sem, SEMANTIC_PREFIX)?;
    }
    let mut opt = Optimizer::new(cfg.optimizer, model_cfg);
    let schedule = cfg.schedule();

    // Validation split: a deterministic shuffle of the training indices.
    let mut shuffled = train_idx_all.clone();
    let mut split_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x7a1]));
    shuffled.shuffle(&mut split_rng);
    let n_val = ((cfg.val_fraction * shuffled.len() as f64).floor() as usize)
        .min(shuffled.len().saturating_sub(1));
    let val_idx: Vec<usize> = shuffled[..n_val].to_vec();
    let mut train_idx: Vec<usize> = shuffled[n_val..].to_vec();
    train_idx.sort_unstable();

    // Corrupted-ground-truth sampling for the semantic encoder input.
    let sim = glyph_proxy_similarity(&GlyphFont::builtin(), DEFAULT_K)?;
    let corrupt_cfg = CorruptionConfig { seed: cfg.seed, ..Default::default() };

    let last_path = out_dir.join("last.ckpt");
    let best_path = out_dir.join("best.ckpt");
    let mut best_val: Option<f64> = None;
    let mut records = Vec::with_capacity(cfg.epochs);

    let w = cfg.loss_weights;
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0xe9, epoch as u64]));
        let mut order = train_idx.clone();
        order.shuffle(&mut rng);
        let lr_scale = lr_multiplier(&schedule, epoch);

        let (mut s_ctc, mut s_v, mut s_s, mut s_f) = (0.0, 0.0, 0.0, 0.0);
        let mut seen = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Params::zeros(model_cfg);
            for &i in batch {
                let label = &dataset.entries[i].label;
                let image = dataset.images[i].to_f64();
                let teacher = rng.random::<f64>() < cfg.tf_ratio;
                let corrupted: Option<Vec<usize>> =
                    if rng.random::<f64>() < cfg.se_corrupt_gt_prob {
                        let pair = corrupt_word(label, &sim, &corrupt_cfg, &mut rng)?;
                        Some(charset::encode_label(&pair.corrupted).expect("charset closed"))
                    } else {
                        None
                    };
                let step =
                    match model.train_forward(&image, label, corrupted.as_deref(), teacher) {
                        Ok(s) => s,
                        Err(NetError::NonFinite { branch }) => {
                            return Err(TrainError::Diverged { epoch, branch })
                        }
                        Err(e) => return Err(e.into()),
                    };
                s_ctc += step.losses.ctc;
                s_v += step.losses.visual;
                s_s += step.losses.semantic;
                s_f += step.losses.fused;
                seen += 1;
                model.train_backward(&step, &w, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            if cfg.freeze_semantic {
                for (name, mut view) in grads.fields_mut() {
                    if name.starts_with(SEMANTIC_PREFIX) {
                        view.as_slice_mut().fill(0.0);
                    }
                }
            }
            opt.step(&mut model.params, &grads, lr_scale);
            if !model.params.all_finite() {
                return Err(TrainError::Diverged { epoch, branch: "total" });
            }
        }

        let n = seen as f64;
        let (m_ctc, m_v, m_s, m_f) = (s_ctc / n, s_v / n, s_s / n, s_f / n);
        let loss_total =
            w.ctc * m_ctc + w.visual * m_v + w.semantic * m_s + w.fused * m_f;

        let val_word_acc = if val_idx.is_empty() {
            None
        } else {
            Some(validation_accuracy(&model, dataset, &val_idx)?)
        };

        save_checkpoint(
            &last_path,
            model_cfg,
            &model.params,
            &run_meta(cfg.seed, epoch),
            None,
        )?;
        let improved = match (val_word_acc, best_val) {
            (Some(v), Some(b)) => v > b,
            (Some(_), None) => true,
            // Without a validation split the newest checkpoint is best.
            (None, _) => true,
        };
        if improved {
            best_val = val_word_acc.or(best_val);
            std::fs::copy(&last_path, &best_path)
                .map_err(|e| TrainError::Io(best_path.display().to_string(), e))?;
        }

        let record = EpochRecord {
            epoch,
            loss_ctc: m_ctc,
            loss_visual: m_v,
            loss_semantic: m_s,
            loss_fused: m_f,
            loss_total,
            lr_scale,
            val_word_acc,
            wall_s: started.elapsed().as_secs_f64(),
            last_checkpoint_digest: checkpoint_digest(&last_path)?,
        };
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(manifest, "{line}").map_err(|e| TrainError::Io("run.jsonl".into(), e))?;
        records.push(record);
    }

    Ok(TrainOutcome {
        best_checkpoint: best_path,
        last_checkpoint: last_path,
        manifest_path,
        epochs: records,
        best_val_acc: best_val,
    })
}

fn run_meta(seed: u64, epoch: usize) -> Vec<(String, String)> {
    vec![
        ("seed".to_string(), seed.to_string()),
        ("epoch".to_string(), epoch.to_string()),
    ]
}

/// Free-running fused-head word accuracy over the given indices.
fn validation_accuracy(
    model: &Model,
    dataset: &Dataset,
    indices: &[usize],
) -> Result<f64, TrainError> {
    let mut correct = 0usize;
    for &i in indices {
        let image = dataset.images[i].to_f64();
        let trace = model.decode_sequence(&image, DecodeMode::FreeRunning)?;
        if normalize(&trace.text()) == normalize(&dataset.entries[i].label) {
            correct += 1;
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}

/// Render a short human-readable training summary.
pub fn render_epochs(records: &[EpochRecord]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:>5} {:>9} {:>9} {:>9} {:>9} {:>9} {:>8} {:>8}",
        "epoch", "ctc", "visual", "semantic", "fused", "total", "val", "secs"
    )
    .unwrap();
    for r in records {
        writeln!(
            out,
            "{:>5} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8} {:>8.1}",
            r.epoch,
            r.loss_ctc,
            r.loss_visual,
            r.loss_semantic,
            r.loss_fused,
            r.loss_total,
            r.val_word_acc.map_or("-".to_string(), |v| format!("{:.1}%", 100.0 * v)),
            r.wall_s
        )
        .unwrap();
    }
    out
}
