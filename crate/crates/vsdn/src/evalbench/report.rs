//! Model evaluation: per-split word accuracies and per-component analysis.

use std::fmt::Write as _;

use crate::glyphforge::{Dataset, Split, Vocabulary};
use crate::netcore::{DecodeMode, Model};
use super::beam::sd_beam_search;
use super::metrics::normalize;
use super::EvalError;

/// Counts for one subset of the test data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SplitStat {
    pub count: usize,
    pub correct: usize,
}

impl SplitStat {
    pub fn accuracy(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.correct as f64 / self.count as f64
        }
    }
}

/// Evaluation results for one checkpoint on one test manifest.
#[derive(Debug, Clone)]
pub struct EvalReport {
    /// Fused-head accuracy per split (splits present only with a vocab).
    pub total: SplitStat,
    pub invoc: Option<SplitStat>,
    pub outvoc: Option<SplitStat>,
    /// Component accuracies over the whole test set.
    pub ctc: SplitStat,
    pub visual: SplitStat,
    /// (k, stat) rows for the semantic decoder's top-k accuracy.
    pub semantic_topk: Vec<(usize, SplitStat)>,
    pub config_digest: String,
    pub dataset_digest: String,
}

impl EvalReport {
    /// Structural identities every report must satisfy.
    pub fn check(&self) -> Result<(), EvalError> {
        if let (Some(iv), Some(ov)) = (&self.invoc, &self.outvoc) {
            if iv.count + ov.count != self.total.count
                || iv.correct + ov.correct != self.total.correct
            {
                return Err(EvalError::Inconsistent(
                    "split counts do not add up to the total".into(),
                ));
            }
        }
        for (k, stat) in &self.semantic_topk {
            if stat.count != self.total.count {
                return Err(EvalError::Inconsistent(format!("top-{k} count mismatch")));
            }
        }
        for w in self.semantic_topk.windows(2) {
            if w[0].1.correct > w[1].1.correct {
                return Err(EvalError::Inconsistent("top-k accuracy not monotone".into()));
            }
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tcount\tcorrect\taccuracy\n");
        let mut row = |name: &str, s: &SplitStat| {
            writeln!(out, "{name}\t{}\t{}\t{:.4}", s.count, s.correct, s.accuracy()).unwrap();
        };
        row("final_total", &self.total);
        if let Some(iv) = &self.invoc {
            row("final_invoc", iv);
        }
        if let Some(ov) = &self.outvoc {
            row("final_outvoc", ov);
        }
        row("ctc", &self.ctc);
        row("visual", &self.visual);
        for (k, s) in &self.semantic_topk {
            row(&format!("semantic_top{k}"), s);
        }
        writeln!(out, "config_digest\t{}", self.config_digest).unwrap();
        writeln!(out, "dataset_digest\t{}", self.dataset_digest).unwrap();
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "test images: {}", self.total.count).unwrap();
        writeln!(out, "{:<16} {:>8} {:>10}", "metric", "count", "accuracy").unwrap();
        let mut row = |name: &str, s: &SplitStat| {
            writeln!(out, "{name:<16} {:>8} {:>9.1}%", s.count, 100.0 * s.accuracy()).unwrap();
        };
        row("final (total)", &self.total);
        if let Some(iv) = &self.invoc {
            row("final (invoc)", iv);
        }
        if let Some(ov) = &self.outvoc {
            row("final (outvoc)", ov);
        }
        row("ctc", &self.ctc);
        row("visual", &self.visual);
        for (k, s) in &self.semantic_topk {
            row(&format!("semantic top-{k}"), s);
        }
        out
    }
}

/// Evaluate a model on a dataset's test split. With a training
/// vocabulary the fused accuracy is additionally reported per
/// in-/out-of-vocabulary split.
pub fn evaluate_model(
    model: &Model,
    dataset: &Dataset,
    train_vocab: Option<&Vocabulary>,
    ks: &[usize],
    dataset_digest: String,
) -> Result<EvalReport, EvalError> {
    let test_idx = dataset.split_indices(Split::Test);
    if test_idx.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let beam_width = ks.iter().copied().max().unwrap_or(1).max(5);

    let invoc_set: Option<std::collections::HashSet<String>> = train_vocab
        .map(|v| v.words().iter().map(|w| normalize(w)).collect());

    let mut total = SplitStat::default();
    let mut invoc = SplitStat::default();
    let mut outvoc = SplitStat::default();
    let mut ctc = SplitStat::default();
    let mut visual = SplitStat::default();
    let mut topk: Vec<(usize, SplitStat)> =
        ks.iter().map(|&k| (k, SplitStat::default())).collect();

    for &i in &test_idx {
        let label = normalize(&dataset.entries[i].label);
        let image = dataset.images[i].to_f64();
        let trace = model.decode_sequence(&image, DecodeMode::FreeRunning)?;
        let fused_hit = normalize(&trace.text()) == label;
        let ctc_hit = normalize(&trace.coarse) == label;
        let vd_hit = normalize(&trace.visual_text()) == label;

        total.count += 1;
        total.correct += fused_hit as usize;
        ctc.count += 1;
        ctc.correct += ctc_hit as usize;
        visual.count += 1;
        visual.correct += vd_hit as usize;

        if let Some(set) = &invoc_set {
            let stat = if set.contains(&label) { &mut invoc } else { &mut outvoc };
            stat.count += 1;
            stat.correct += fused_hit as usize;
        }

        let hyps = sd_beam_search(model, &trace.coarse, beam_width, model.cfg.t_max);
        let rank = hyps.iter().position(|h| normalize(&h.text) == label);
        for (k, stat) in topk.iter_mut() {
            stat.count += 1;
            if matches!(rank, Some(r) if r < *k) {
                stat.correct += 1;
            }
        }
    }

    let report = EvalReport {
        total,
        invoc: invoc_set.as_ref().map(|_| invoc),
        outvoc: invoc_set.as_ref().map(|_| outvoc),
        ctc,
        visual,
        semantic_topk: topk,
        config_digest: crate::netcore::checkpoint::config_digest(&model.cfg),
        dataset_digest,
    };
    report.check()?;
    Ok(report)
}

/// Top-k semantic accuracy alone (a convenience wrapper used by the CLI).
pub fn topk_semantic(
    model: &Model,
    dataset: &Dataset,
    k: usize,
    dataset_digest: String,
) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::Inconsistent("k must be >= 1".into()));
    }
    let report = evaluate_model(model, dataset, None, &[k], dataset_digest)?;
    Ok(report.semantic_topk.iter().find(|(kk, _)| *kk == k).unwrap().1.accuracy())
}
