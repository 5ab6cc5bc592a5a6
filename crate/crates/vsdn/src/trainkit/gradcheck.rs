//! Central-difference verification of the analytic gradients.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charset;
use crate::netcore::{LossWeights, Model, ModelConfig, Params};
use super::TrainError;

#[derive(Debug, Clone)]
pub struct GroupReport {
    pub name: String,
    pub checked: usize,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub groups: Vec<GroupReport>,
    pub step: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_err).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_err() < self.tolerance
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            out.push_str(&format!(
                "{:<24} checked {:>3}  max rel err {:.3e}\n",
                g.name, g.checked, g.max_rel_err
            ));
        }
        out.push_str(&format!(
            "overall max rel err {:.3e} (tolerance {:.1e}): {}\n",
            self.max_rel_err(),
            self.tolerance,
            if self.passed() { "pass" } else { "FAIL" }
        ));
        out
    }
}

/// Central differences with step 1e-5 carry rounding noise of about
/// |loss| * eps_f64 / step ~ 1e-9, so coordinates far below that scale
/// cannot be compared by ratio alone. The error is |a - n| relative to
/// max(|a|, |n|, ATOL/RTOL): equivalent to requiring
/// |a - n| <= ATOL + RTOL * max(|a|, |n|).
const FD_ATOL: f64 = 1e-8;
const FD_RTOL: f64 = 1e-4;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FD_ATOL / FD_RTOL)
}

/// Compare analytic gradients of the weighted total loss against central
/// finite differences on up to `n_per_group` sampled coordinates of every
/// parameter array.
pub fn gradient_check(
    cfg: &ModelConfig,
    n_per_group: usize,
    seed: u64,
) -> Result<GradCheckReport, TrainError> {
    let weights = LossWeights::default();
    let model = Model::new(cfg.clone(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbeef);

    // A noise image avoids pooling ties and relu kinks at the FD step.
    let image = Array2::from_shape_fn((cfg.img_h, cfg.img_w), |_| rng.random_range(0.02..1.0));
    let label_len = (cfg.t_max - 1).min(3);
    let label: String =
        (0..label_len).map(|_| charset::index_char(rng.random_range(0..charset::N_VIS))).collect();
    // Fix the semantic-encoder input so the loss is a smooth function of
    // the parameters (the coarse string would change discretely).
    let se_chars: Vec<usize> =
        (0..label_len).map(|_| rng.random_range(0..charset::N_VIS)).collect();

    let step = model.train_forward(&image, &label, Some(&se_chars), true)?;
    let mut grads = Params::zeros(cfg);
    model.train_backward(&step, &weights, &mut grads);

    let loss_at = |m: &Model| -> f64 {
        let s = m.train_forward(&image, &label, Some(&se_chars), true).expect("forward");
        s.losses.weighted_total(&weights)
    };

    let eps = 1e-5;
    let names: Vec<(String, usize)> =
        grads.fields().into_iter().map(|(n, v)| (n, v.as_slice().len())).collect();
    let mut groups = Vec::with_capacity(names.len());
    for (gi, (name, len)) in names.iter().enumerate() {
        let n_check = n_per_group.min(*len);
        // Sample distinct coordinates.
        let mut coords: Vec<usize> = (0..*len).collect();
        for i in 0..n_check {
            let j = rng.random_range(i..*len);
            coords.swap(i, j);
        }
        let mut max_err = 0.0f64;
        for &ci in coords.iter().take(n_check) {
            let ana = grads.fields()[gi].1.as_slice()[ci];
            let mut mp = model.clone();
            mp.params.fields_mut()[gi].1.as_slice_mut()[ci] += eps;
            let lp = loss_at(&mp);
            let mut mm = model.clone();
            mm.params.fields_mut()[gi].1.as_slice_mut()[ci] -= eps;
            let lm = loss_at(&mm);
            let num = (lp - lm) / (2.0 * eps);
            max_err = max_err.max(rel_err(ana, num));
        }
        groups.push(GroupReport { name: name.clone(), checked: n_check, max_rel_err: max_err });
    }
    Ok(GradCheckReport { groups, step: eps, tolerance: FD_RTOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::QueryMode;

    #[test]
    fn tiny_decoupled_model_passes() {
        let report = gradient_check(&ModelConfig::tiny(), 6, 42).unwrap();
        assert_eq!(report.groups.len(), Params::zeros(&ModelConfig::tiny()).n_arrays());
        assert!(report.passed(), "\n{}", report.render());
    }

    #[test]
    fn coupled_and_previous_visual_variants_pass() {
        let cfg = ModelConfig {
            coupled_baseline: true,
            query_mode: QueryMode::PreviousVisual,
            ..ModelConfig::tiny()
        };
        let report = gradient_check(&cfg, 4, 7).unwrap();
        assert!(report.passed(), "\n{}", report.render());
    }

    #[test]
    fn zero_weight_branch_has_zero_gradient_in_its_head() {
        let cfg = ModelConfig::tiny();
        let model = Model::new(cfg.clone(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let image =
            Array2::from_shape_fn((cfg.img_h, cfg.img_w), |_| rng.random_range(0.02..1.0));
        let step = model.train_forward(&image, "ab", Some(&[0, 1]), true).unwrap();
        let weights = LossWeights { visual: 0.0, ..LossWeights::default() };
        let mut grads = Params::zeros(&cfg);
        model.train_backward(&step, &weights, &mut grads);
        for (name, v) in grads.fields() {
            if name.starts_with("vd.head") {
                assert!(v.as_slice().iter().all(|&x| x == 0.0), "{name} has gradient");
            }
        }
    }
}
