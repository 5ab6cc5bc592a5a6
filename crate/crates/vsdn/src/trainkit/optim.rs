//! Optimizers and the learning-rate schedule.

use std::collections::BTreeMap;

use crate::netcore::{ModelConfig, Params};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
    Adadelta { lr: f64, rho: f64, eps: f64 },
    Sgd { lr: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl OptimizerKind {
    /// The paper-style setting: Adadelta at learning rate 1.0.
    pub fn adadelta() -> Self {
        OptimizerKind::Adadelta { lr: 1.0, rho: 0.9, eps: 1e-6 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Adam { .. } => "adam",
            OptimizerKind::Adadelta { .. } => "adadelta",
            OptimizerKind::Sgd { .. } => "sgd",
        }
    }
}

/// Optimizer state mirrors the parameter shapes.
pub struct Optimizer {
    pub kind: OptimizerKind,
    m: Params,
    v: Params,
    t: usize,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, cfg: &ModelConfig) -> Self {
        Optimizer { kind, m: Params::zeros(cfg), v: Params::zeros(cfg), t: 0 }
    }

    /// Apply one update. `lr_scale` multiplies the base learning rate
    /// (the schedule's current value).
    pub fn step(&mut self, params: &mut Params, grads: &Params, lr_scale: f64) {
        self.t += 1;
        let mut ps = params.fields_mut();
        let gs = grads.fields();
        let mut ms = self.m.fields_mut();
        let mut vs = self.v.fields_mut();
        match self.kind {
            OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                let bc1 = 1.0 - beta1.powi(self.t as i32);
                let bc2 = 1.0 - beta2.powi(self.t as i32);
                let step_lr = lr * lr_scale;
                for i in 0..ps.len() {
                    debug_assert_eq!(ps[i].0, gs[i].0);
                    let p = ps[i].1.as_slice_mut();
                    let g = gs[i].1.as_slice();
                    let m = ms[i].1.as_slice_mut();
                    let v = vs[i].1.as_slice_mut();
                    for j in 0..p.len() {
                        m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                        v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                        let mhat = m[j] / bc1;
                        let vhat = v[j] / bc2;
                        p[j] -= step_lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
            OptimizerKind::Adadelta { lr, rho, eps } => {
                let step_lr = lr * lr_scale;
                for i in 0..ps.len() {
                    let p = ps[i].1.as_slice_mut();
                    let g = gs[i].1.as_slice();
                    let eg = ms[i].1.as_slice_mut(); // E[g^2]
                    let ed = vs[i].1.as_slice_mut(); // E[dx^2]
                    for j in 0..p.len() {
                        eg[j] = rho * eg[j] + (1.0 - rho) * g[j] * g[j];
                        let dx = -((ed[j] + eps).sqrt() / (eg[j] + eps).sqrt()) * g[j];
                        ed[j] = rho * ed[j] + (1.0 - rho) * dx * dx;
                        p[j] += step_lr * dx;
                    }
                }
            }
            OptimizerKind::Sgd { lr } => {
                let step_lr = lr * lr_scale;
                for i in 0..ps.len() {
                    let p = ps[i].1.as_slice_mut();
                    let g = gs[i].1.as_slice();
                    for j in 0..p.len() {
                        p[j] -= step_lr * g[j];
                    }
                }
            }
        }
    }
}

/// Multiplier in effect for a 1-based epoch: the value at the largest
/// schedule key <= epoch, defaulting to 1.
pub fn lr_multiplier(schedule: &BTreeMap<usize, f64>, epoch: usize) -> f64 {
    schedule.range(..=epoch).next_back().map(|(_, &m)| m).unwrap_or(1.0)
}

/// Tenfold decays at 2/3 and 5/6 of the run.
pub fn default_decay_schedule(epochs: usize) -> BTreeMap<usize, f64> {
    let mut m = BTreeMap::new();
    let first = ((epochs as f64 * 2.0 / 3.0).round() as usize).max(2);
    let second = ((epochs as f64 * 5.0 / 6.0).round() as usize).max(first + 1);
    if first <= epochs {
        m.insert(first, 0.1);
    }
    if second <= epochs {
        m.insert(second, 0.01);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_lookup() {
        let s = default_decay_schedule(6);
        assert_eq!(s.get(&4), Some(&0.1));
        assert_eq!(s.get(&5), Some(&0.01));
        assert_eq!(lr_multiplier(&s, 1), 1.0);
        assert_eq!(lr_multiplier(&s, 4), 0.1);
        assert_eq!(lr_multiplier(&s, 5), 0.01);
        assert_eq!(lr_multiplier(&s, 6), 0.01);
    }

    #[test]
    fn adam_with_zero_grads_is_a_no_op() {
        let cfg = ModelConfig::tiny();
        let mut params = Params::init(&cfg, 0);
        let snapshot: Vec<Vec<f64>> =
            params.fields().into_iter().map(|(_, v)| v.as_slice().to_vec()).collect();
        let grads = Params::zeros(&cfg);
        let mut opt = Optimizer::new(OptimizerKind::default(), &cfg);
        for _ in 0..3 {
            opt.step(&mut params, &grads, 1.0);
        }
        for ((_, v), snap) in params.fields().into_iter().zip(&snapshot) {
            assert_eq!(v.as_slice(), snap.as_slice());
        }
    }

    #[test]
    fn sgd_moves_against_gradient() {
        let cfg = ModelConfig::tiny();
        let mut params = Params::zeros(&cfg);
        let mut grads = Params::zeros(&cfg);
        grads.fields_mut()[0].1.as_slice_mut()[0] = 2.0;
        let mut opt = Optimizer::new(OptimizerKind::Sgd { lr: 0.5 }, &cfg);
        opt.step(&mut params, &grads, 1.0);
        assert_eq!(params.fields()[0].1.as_slice()[0], -1.0);
    }
}
