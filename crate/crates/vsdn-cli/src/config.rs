//! Flat key=value run configuration.
//!
//! Resolution order: built-in defaults, then a config file, then
//! command-line `--set key=value` overrides. Unknown keys are usage
//! errors. Every run directory receives the fully-resolved echo.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use vsdn::netcore::{LossWeights, ModelConfig, QueryMode};
use vsdn::trainkit::{OptimizerKind, TrainConfig};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Base optimizer learning rate (applied onto the optimizer kind).
    pub lr: f64,
    pub optimizer_name: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            lr: 1e-3,
            optimizer_name: "adam".into(),
        }
    }
}

impl RunConfig {
    /// Apply `key = value` lines from a file (# starts a comment).
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!(
                    "{} line {}: expected `key = value`",
                    path.display(),
                    ln + 1
                ))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, sets: &[String]) -> Result<(), CliError> {
        for s in sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("--set {s:?}: expected key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad =
            |what: &str| CliError::usage(format!("bad value {value:?} for {key} ({what})"));
        let num = |what: &str| -> Result<usize, CliError> {
            value.parse().map_err(|_| bad(what))
        };
        let real = |what: &str| -> Result<f64, CliError> {
            value.parse().map_err(|_| bad(what))
        };
        match key {
            "img_h" => self.model.img_h = num("integer")?,
            "img_w" => self.model.img_w = num("integer")?,
            "t_max" => self.model.t_max = num("integer")?,
            "feat_dim" => self.model.feat_dim = num("integer")?,
            "sem_dim" => self.model.sem_dim = num("integer")?,
            "embed_dim" => self.model.embed_dim = num("integer")?,
            "attn_dim" => self.model.attn_dim = num("integer")?,
            "step_embed_dim" => self.model.step_embed_dim = num("integer")?,
            "ctc_hidden" => self.model.ctc_hidden = num("integer")?,
            "conv_channels" => {
                self.model.conv_channels = value
                    .split(',')
                    .map(|c| c.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("comma-separated integers"))?;
            }
            "coupled_baseline" => {
                self.model.coupled_baseline =
                    value.parse().map_err(|_| bad("true|false"))?;
            }
            "query_mode" => {
                self.model.query_mode = QueryMode::parse(value)
                    .map_err(|_| bad("semantic|previous_visual"))?;
            }
            "batch_size" => self.train.batch_size = num("integer")?,
            "epochs" => self.train.epochs = num("integer")?,
            "optimizer" => {
                if !["adam", "adadelta", "sgd"].contains(&value) {
                    return Err(bad("adam|adadelta|sgd"));
                }
                self.optimizer_name = value.to_string();
            }
            "lr" => self.lr = real("number")?,
            "lr_schedule" => {
                let mut m = BTreeMap::new();
                for part in value.split(',') {
                    let (e, f) = part
                        .split_once(':')
                        .ok_or_else(|| bad("epoch:multiplier list"))?;
                    m.insert(
                        e.trim().parse().map_err(|_| bad("epoch:multiplier list"))?,
                        f.trim().parse().map_err(|_| bad("epoch:multiplier list"))?,
                    );
                }
                self.train.lr_schedule = Some(m);
            }
            "seed" => self.train.seed = value.parse().map_err(|_| bad("integer"))?,
            "lambda_ctc" => self.train.loss_weights.ctc = real("number")?,
            "lambda_v" => self.train.loss_weights.visual = real("number")?,
            "lambda_s" => self.train.loss_weights.semantic = real("number")?,
            "lambda_f" => self.train.loss_weights.fused = real("number")?,
            "tf_ratio" => self.train.tf_ratio = real("number")?,
            "se_corrupt_gt_prob" => self.train.se_corrupt_gt_prob = real("number")?,
            "freeze_semantic" => {
                self.train.freeze_semantic = value.parse().map_err(|_| bad("true|false"))?;
            }
            "val_fraction" => self.train.val_fraction = real("number")?,
            other => {
                return Err(CliError::usage(format!("unknown configuration key {other:?}")))
            }
        }
        Ok(())
    }

    /// Finish resolution: build the optimizer from name + lr.
    pub fn finalize(&mut self) -> Result<(), CliError> {
        self.train.optimizer = match self.optimizer_name.as_str() {
            "adam" => OptimizerKind::Adam { lr: self.lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 },
            "adadelta" => OptimizerKind::Adadelta { lr: self.lr, rho: 0.9, eps: 1e-6 },
            "sgd" => OptimizerKind::Sgd { lr: self.lr },
            other => return Err(CliError::usage(format!("unknown optimizer {other:?}"))),
        };
        self.model
            .validate()
            .map_err(|e| CliError::usage(format!("invalid model configuration: {e}")))?;
        Ok(())
    }

    /// The fully-resolved echo, one `key = value` per line.
    pub fn echo(&self) -> String {
        let m = &self.model;
        let t = &self.train;
        let w: &LossWeights = &t.loss_weights;
        let mut out = String::new();
        let channels: Vec<String> =
            m.conv_channels.iter().map(|c| c.to_string()).collect();
        writeln!(out, "img_h = {}", m.img_h).unwrap();
        writeln!(out, "img_w = {}", m.img_w).unwrap();
        writeln!(out, "t_max = {}", m.t_max).unwrap();
        writeln!(out, "feat_dim = {}", m.feat_dim).unwrap();
        writeln!(out, "sem_dim = {}", m.sem_dim).unwrap();
        writeln!(out, "embed_dim = {}", m.embed_dim).unwrap();
        writeln!(out, "attn_dim = {}", m.attn_dim).unwrap();
        writeln!(out, "step_embed_dim = {}", m.step_embed_dim).unwrap();
        writeln!(out, "conv_channels = {}", channels.join(",")).unwrap();
        writeln!(out, "ctc_hidden = {}", m.ctc_hidden).unwrap();
        writeln!(out, "coupled_baseline = {}", m.coupled_baseline).unwrap();
        writeln!(out, "query_mode = {}", m.query_mode.as_str()).unwrap();
        writeln!(out, "batch_size = {}", t.batch_size).unwrap();
        writeln!(out, "epochs = {}", t.epochs).unwrap();
        writeln!(out, "optimizer = {}", self.optimizer_name).unwrap();
        writeln!(out, "lr = {}", self.lr).unwrap();
        let schedule: Vec<String> = t
            .schedule()
            .iter()
            .map(|(e, f)| format!("{e}:{f}"))
            .collect();
        writeln!(out, "lr_schedule = {}", schedule.join(",")).unwrap();
        writeln!(out, "seed = {}", t.seed).unwrap();
        writeln!(out, "lambda_ctc = {}", w.ctc).unwrap();
        writeln!(out, "lambda_v = {}", w.visual).unwrap();
        writeln!(out, "lambda_s = {}", w.semantic).unwrap();
        writeln!(out, "lambda_f = {}", w.fused).unwrap();
        writeln!(out, "tf_ratio = {}", t.tf_ratio).unwrap();
        writeln!(out, "se_corrupt_gt_prob = {}", t.se_corrupt_gt_prob).unwrap();
        writeln!(out, "freeze_semantic = {}", t.freeze_semantic).unwrap();
        writeln!(out, "val_fraction = {}", t.val_fraction).unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("no_such_key", "1").is_err());
        assert!(cfg.set("epochs", "3").is_ok());
        assert_eq!(cfg.train.epochs, 3);
    }

    #[test]
    fn echo_parses_back_identically() {
        let mut cfg = RunConfig::default();
        cfg.set("lambda_s", "0.3").unwrap();
        cfg.set("query_mode", "previous_visual").unwrap();
        let echo = cfg.echo();
        let mut cfg2 = RunConfig::default();
        for line in echo.lines() {
            let (k, v) = line.split_once('=').unwrap();
            cfg2.set(k.trim(), v.trim()).unwrap();
        }
        assert_eq!(cfg2.train.loss_weights.semantic, 0.3);
        assert_eq!(cfg2.model.query_mode, QueryMode::PreviousVisual);
        assert_eq!(cfg2.echo(), echo);
    }
}
