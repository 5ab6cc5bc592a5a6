//! Ablation suites: train and evaluate controlled variants on identical
//! data and seeds, emit a side-by-side table.

use std::fmt::Write as _;
use std::path::Path;

use crate::glyphforge::{dataset_digest, Dataset};
use crate::netcore::{LossWeights, ModelConfig, QueryMode};
use crate::trainkit::{train_joint, TrainConfig};
use super::report::{evaluate_model, EvalReport};
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationSuite {
    /// Table-style grid over the visual and semantic loss terms.
    LossTerms,
    /// Semantic-state query versus previous-visual-state query.
    QueryMode,
    /// Coupled decoder (previous symbol fed back) versus decoupled.
    CoupledBaseline,
}

impl AblationSuite {
    pub fn parse(s: &str) -> Result<Self, EvalError> {
        match s {
            "loss_terms" => Ok(AblationSuite::LossTerms),
            "query_mode" => Ok(AblationSuite::QueryMode),
            "coupled_baseline" => Ok(AblationSuite::CoupledBaseline),
            other => Err(EvalError::Inconsistent(format!("unknown suite {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AblationSuite::LossTerms => "loss_terms",
            AblationSuite::QueryMode => "query_mode",
            AblationSuite::CoupledBaseline => "coupled_baseline",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub variant: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub suite: AblationSuite,
    pub rows: Vec<AblationRow>,
    pub dataset_digest: String,
}

/// Variant list per suite: (name, model-config tweak, train-config tweak).
fn variants(
    suite: AblationSuite,
    base_model: &ModelConfig,
    base_train: &TrainConfig,
) -> Vec<(String, ModelConfig, TrainConfig)> {
    let mut out = Vec::new();
    match suite {
        AblationSuite::LossTerms => {
            for (name, lv, ls) in [
                ("neither", 0.0, 0.0),
                ("visual_only", 1.0, 0.0),
                ("semantic_only", 0.0, 0.2),
                ("both", 1.0, 0.2),
            ] {
                let mut t = base_train.clone();
                t.loss_weights =
                    LossWeights { visual: lv, semantic: ls, ..base_train.loss_weights };
                out.push((name.to_string(), base_model.clone(), t));
            }
        }
        AblationSuite::QueryMode => {
            for (name, mode) in [
                ("query_prev_visual", QueryMode::PreviousVisual),
                ("query_semantic", QueryMode::Semantic),
            ] {
                let m = ModelConfig { query_mode: mode, ..base_model.clone() };
                out.push((name.to_string(), m, base_train.clone()));
            }
        }
        AblationSuite::CoupledBaseline => {
            let aster = ModelConfig {
                coupled_baseline: true,
                query_mode: QueryMode::PreviousVisual,
                ..base_model.clone()
            };
            let aster_star = ModelConfig {
                coupled_baseline: false,
                query_mode: QueryMode::PreviousVisual,
                ..base_model.clone()
            };
            let vsdn = ModelConfig {
                coupled_baseline: false,
                query_mode: QueryMode::Semantic,
                ..base_model.clone()
            };
            out.push(("aster_style".to_string(), aster, strip_sem_init(base_train)));
            out.push(("aster_star_style".to_string(), aster_star, strip_sem_init(base_train)));
            out.push(("vsdn".to_string(), vsdn.clone(), strip_sem_init(base_train)));
            if base_train.sem_init.is_some() {
                out.push(("vsdn_pretrained".to_string(), vsdn, base_train.clone()));
            }
        }
    }
    out
}

fn strip_sem_init(t: &TrainConfig) -> TrainConfig {
    TrainConfig { sem_init: None, ..t.clone() }
}

/// Train and evaluate every variant of a suite under identical data and
/// seed. Results (TSV and a text table) land in `out_dir`.
pub fn run_ablation(
    suite: AblationSuite,
    dataset: &Dataset,
    base_model: &ModelConfig,
    base_train: &TrainConfig,
    ks: &[usize],
    out_dir: &Path,
) -> Result<AblationOutcome, EvalError> {
    let digest = dataset_digest(&dataset.dir)?;
    let mut rows = Vec::new();
    for (name, model_cfg, train_cfg) in variants(suite, base_model, base_train) {
        let run_dir = out_dir.join(&name);
        let outcome = train_joint(dataset, &model_cfg, &train_cfg, &run_dir)
            .map_err(|e| EvalError::Train(name.clone(), e.to_string()))?;
        let (cfg, params, _) =
            crate::netcore::checkpoint::load_checkpoint(&outcome.best_checkpoint)?;
        let model = crate::netcore::Model::from_parts(cfg, params)?;
        let report =
            evaluate_model(&model, dataset, Some(&dataset.vocab), ks, digest.clone())?;
        rows.push(AblationRow { variant: name, report });
    }
    let outcome = AblationOutcome { suite, rows, dataset_digest: digest };
    std::fs::create_dir_all(out_dir)
        .map_err(|e| EvalError::Io(out_dir.display().to_string(), e))?;
    std::fs::write(out_dir.join("ablation.tsv"), outcome.to_tsv())
        .map_err(|e| EvalError::Io("ablation.tsv".into(), e))?;
    std::fs::write(out_dir.join("ablation.txt"), outcome.render_text())
        .map_err(|e| EvalError::Io("ablation.txt".into(), e))?;
    Ok(outcome)
}

impl AblationOutcome {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("variant\tinvoc\toutvoc\ttotal\tctc\tvisual\tdataset_digest\n");
        for row in &self.rows {
            let r = &row.report;
            writeln!(
                out,
                "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}",
                row.variant,
                r.invoc.map_or("-".into(), |s| format!("{:.4}", s.accuracy())),
                r.outvoc.map_or("-".into(), |s| format!("{:.4}", s.accuracy())),
                r.total.accuracy(),
                r.ctc.accuracy(),
                r.visual.accuracy(),
                self.dataset_digest,
            )
            .unwrap();
        }
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "suite: {}", self.suite.as_str()).unwrap();
        writeln!(
            out,
            "{:<20} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "variant", "invoc", "outvoc", "total", "ctc", "visual"
        )
        .unwrap();
        for row in &self.rows {
            let r = &row.report;
            let pct = |s: Option<super::report::SplitStat>| {
                s.map_or("-".to_string(), |s| format!("{:.1}%", 100.0 * s.accuracy()))
            };
            writeln!(
                out,
                "{:<20} {:>8} {:>8} {:>7.1}% {:>7.1}% {:>7.1}%",
                row.variant,
                pct(r.invoc),
                pct(r.outvoc),
                100.0 * r.total.accuracy(),
                100.0 * r.ctc.accuracy(),
                100.0 * r.visual.accuracy(),
            )
            .unwrap();
        }
        out
    }
}
