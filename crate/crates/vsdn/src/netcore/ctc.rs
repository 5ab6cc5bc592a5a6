//! Alignment-free sequence loss: log-space forward-backward over the
//! blank-interleaved label, plus greedy decoding.

use ndarray::Array2;

use crate::charset::{self, BLANK, N_CTC};
use super::linalg::{argmax, log_add};
use super::NetError;

/// Greedy decode: per-step argmax, collapse repeats, drop blanks.
pub fn ctc_greedy_decode(probs: &Array2<f64>) -> String {
    let mut out = String::new();
    let mut last = BLANK;
    for row in probs.rows() {
        let k = argmax(row.as_slice().unwrap());
        if k != last && k != BLANK {
            out.push(charset::index_char(k));
        }
        last = k;
    }
    out
}

/// Blank-interleaved label: [-, l1, -, l2, ..., -].
fn interleave(label: &[usize], blank: usize) -> Vec<usize> {
    let mut lp = Vec::with_capacity(2 * label.len() + 1);
    lp.push(blank);
    for &l in label {
        lp.push(l);
        lp.push(blank);
    }
    lp
}

/// Frames needed for a label: its length plus one per adjacent repeat.
pub fn min_frames(label: &[usize]) -> usize {
    label.len() + label.windows(2).filter(|w| w[0] == w[1]).count()
}

/// Negative log probability of all frame paths collapsing to `label`,
/// over arbitrary class counts with `blank` as the blank index.
pub fn ctc_loss_indices(
    probs: &Array2<f64>,
    label: &[usize],
    blank: usize,
) -> Result<f64, NetError> {
    let log_p = probs.mapv(f64::ln);
    let (loss, _) = forward(&log_p, label, blank)?;
    Ok(loss)
}

/// CTC loss over the 37-class charset layout from a row-stochastic
/// probability sequence.
pub fn ctc_loss(probs: &Array2<f64>, label: &str) -> Result<f64, NetError> {
    if probs.ncols() != N_CTC {
        return Err(NetError::Shape(format!(
            "expected {N_CTC} classes, got {}",
            probs.ncols()
        )));
    }
    let label = charset::encode_label(label).map_err(NetError::BadChar)?;
    ctc_loss_indices(probs, &label, BLANK)
}

/// Log-space forward pass; returns (loss, log_alpha).
fn forward(
    log_p: &Array2<f64>,
    label: &[usize],
    blank: usize,
) -> Result<(f64, Array2<f64>), NetError> {
    let t_len = log_p.nrows();
    if label.is_empty() {
        return Err(NetError::EmptyLabel);
    }
    let need = min_frames(label);
    if t_len < need {
        return Err(NetError::CtcInfeasible { needed: need, have: t_len });
    }
    let lp = interleave(label, blank);
    let s_len = lp.len();
    let mut alpha = Array2::<f64>::from_elem((t_len, s_len), f64::NEG_INFINITY);
    alpha[(0, 0)] = log_p[(0, blank)];
    alpha[(0, 1)] = log_p[(0, lp[1])];
    for t in 1..t_len {
        for s in 0..s_len {
            let mut a = alpha[(t - 1, s)];
            if s >= 1 {
                a = log_add(a, alpha[(t - 1, s - 1)]);
            }
            if s >= 2 && lp[s] != blank && lp[s] != lp[s - 2] {
                a = log_add(a, alpha[(t - 1, s - 2)]);
            }
            alpha[(t, s)] = a + log_p[(t, lp[s])];
        }
    }
    let total = log_add(alpha[(t_len - 1, s_len - 1)], alpha[(t_len - 1, s_len - 2)]);
    if total == f64::NEG_INFINITY {
        return Err(NetError::CtcInfeasible { needed: need, have: t_len });
    }
    Ok((-total, alpha))
}

/// Loss and its gradient with respect to the per-frame log probabilities.
pub(crate) fn ctc_loss_grad_logp(
    log_p: &Array2<f64>,
    label: &[usize],
    blank: usize,
) -> Result<(f64, Array2<f64>), NetError> {
    let (loss, alpha) = forward(log_p, label, blank)?;
    let t_len = log_p.nrows();
    let lp = interleave(label, blank);
    let s_len = lp.len();

    // beta[t][s]: log probability of completing from frame t+1 given
    // state s at frame t (excludes the emission at t).
    let mut beta = Array2::<f64>::from_elem((t_len, s_len), f64::NEG_INFINITY);
    beta[(t_len - 1, s_len - 1)] = 0.0;
    beta[(t_len - 1, s_len - 2)] = 0.0;
    for t in (0..t_len - 1).rev() {
        for s in 0..s_len {
            let mut b = beta[(t + 1, s)] + log_p[(t + 1, lp[s])];
            if s + 1 < s_len {
                b = log_add(b, beta[(t + 1, s + 1)] + log_p[(t + 1, lp[s + 1])]);
            }
            if s + 2 < s_len && lp[s + 2] != blank && lp[s + 2] != lp[s] {
                b = log_add(b, beta[(t + 1, s + 2)] + log_p[(t + 1, lp[s + 2])]);
            }
            beta[(t, s)] = b;
        }
    }

    let log_total = -loss;
    let mut dlogp = Array2::<f64>::zeros(log_p.dim());
    for t in 0..t_len {
        // Accumulate posterior mass per class in log space.
        let mut per_class: Vec<f64> = vec![f64::NEG_INFINITY; log_p.ncols()];
        for s in 0..s_len {
            let g = alpha[(t, s)] + beta[(t, s)];
            if g != f64::NEG_INFINITY {
                per_class[lp[s]] = log_add(per_class[lp[s]], g);
            }
        }
        for (k, &g) in per_class.iter().enumerate() {
            if g != f64::NEG_INFINITY {
                dlogp[(t, k)] = -(g - log_total).exp();
            }
        }
    }
    Ok((loss, dlogp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force oracle: enumerate every frame path, collapse, sum the
    /// probabilities of paths matching the label.
    pub fn ctc_loss_bruteforce(probs: &Array2<f64>, label: &[usize], blank: usize) -> f64 {
        let t = probs.nrows();
        let c = probs.ncols();
        let mut total = 0.0;
        let mut path = vec![0usize; t];
        loop {
            let mut collapsed = Vec::new();
            let mut last = usize::MAX;
            for &p in &path {
                if p != last && p != blank {
                    collapsed.push(p);
                }
                last = p;
            }
            if collapsed == label {
                let mut prob = 1.0;
                for (ti, &p) in path.iter().enumerate() {
                    prob *= probs[(ti, p)];
                }
                total += prob;
            }
            // Next path in odometer order.
            let mut i = 0;
            loop {
                if i == t {
                    return -total.ln();
                }
                path[i] += 1;
                if path[i] < c {
                    break;
                }
                path[i] = 0;
                i += 1;
            }
        }
    }

    fn random_probs(t: usize, c: usize, rng: &mut impl Rng) -> Array2<f64> {
        let mut p = Array2::from_shape_fn((t, c), |_| rng.random_range(0.05..1.0));
        for mut row in p.rows_mut() {
            let s = row.sum();
            row.mapv_inplace(|v| v / s);
        }
        p
    }

    #[test]
    fn greedy_collapse_rules() {
        // one-hot rows [a, a, blank, b] -> "ab"
        let mut p = Array2::zeros((4, N_CTC));
        p[(0, 0)] = 1.0;
        p[(1, 0)] = 1.0;
        p[(2, BLANK)] = 1.0;
        p[(3, 1)] = 1.0;
        assert_eq!(ctc_greedy_decode(&p), "ab");

        let mut p = Array2::zeros((3, N_CTC));
        for t in 0..3 {
            p[(t, BLANK)] = 1.0;
        }
        assert_eq!(ctc_greedy_decode(&p), "");

        // [a, blank, a] -> "aa": blank separates repeats.
        let mut p = Array2::zeros((3, N_CTC));
        p[(0, 0)] = 1.0;
        p[(1, BLANK)] = 1.0;
        p[(2, 0)] = 1.0;
        assert_eq!(ctc_greedy_decode(&p), "aa");
    }

    #[test]
    fn perfect_one_hot_has_zero_loss() {
        let mut p = Array2::from_elem((1, N_CTC), 0.0);
        p[(0, 0)] = 1.0;
        let loss = ctc_loss(&p, "a").unwrap();
        assert!(loss.abs() < 1e-12);
    }

    #[test]
    fn infeasible_repeat_is_an_error() {
        // "aa" needs a blank between repeats: T=2 is infeasible.
        let p = array![[0.5, 0.5], [0.5, 0.5]];
        let err = ctc_loss_indices(&p, &[0, 0], 1);
        assert!(matches!(err, Err(NetError::CtcInfeasible { needed: 3, have: 2 })));
    }

    #[test]
    fn matches_bruteforce_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..60 {
            let t = rng.random_range(1..=5);
            let c = rng.random_range(2..=4); // includes blank
            let blank = c - 1;
            let label_len = rng.random_range(1..=3.min(t));
            let label: Vec<usize> =
                (0..label_len).map(|_| rng.random_range(0..blank)).collect();
            let p = random_probs(t, c, &mut rng);
            let oracle = ctc_loss_bruteforce(&p, &label, blank);
            match ctc_loss_indices(&p, &label, blank) {
                Ok(loss) => {
                    assert!(oracle.is_finite());
                    assert!(
                        (loss - oracle).abs() / oracle.abs().max(1e-12) < 1e-9,
                        "dp {loss} vs oracle {oracle}"
                    );
                }
                Err(NetError::CtcInfeasible { .. }) => {
                    assert!(oracle.is_infinite(), "oracle finite but dp infeasible");
                }
                Err(e) => panic!("unexpected error {e:?}"),
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (t, c, blank) = (4, 4, 3);
        let label = vec![0usize, 1, 0];
        // Work on unconstrained logits -> log_softmax rows.
        let logits = Array2::from_shape_fn((t, c), |_| rng.random_range(-1.0..1.0));
        let logp_of = |lg: &Array2<f64>| -> Array2<f64> {
            let mut out = lg.clone();
            for mut row in out.rows_mut() {
                let r = super::super::linalg::log_softmax(&row.to_owned());
                row.assign(&r);
            }
            out
        };
        let logp = logp_of(&logits);
        let (_, dlogp) = ctc_loss_grad_logp(&logp, &label, blank).unwrap();
        // Chain through log-softmax: dlogit = dlogp - p * sum(dlogp).
        let mut dlogits = Array2::<f64>::zeros((t, c));
        for ti in 0..t {
            let row_sum: f64 = dlogp.row(ti).sum();
            for k in 0..c {
                dlogits[(ti, k)] = dlogp[(ti, k)] - logp[(ti, k)].exp() * row_sum;
            }
        }
        let eps = 1e-6;
        for ti in 0..t {
            for k in 0..c {
                let mut lp = logits.clone();
                let mut lm = logits.clone();
                lp[(ti, k)] += eps;
                lm[(ti, k)] -= eps;
                let (fp, _) = ctc_loss_grad_logp(&logp_of(&lp), &label, blank).unwrap();
                let (fm, _) = ctc_loss_grad_logp(&logp_of(&lm), &label, blank).unwrap();
                let num = (fp - fm) / (2.0 * eps);
                let ana = dlogits[(ti, k)];
                assert!(
                    (ana - num).abs() / ana.abs().max(num.abs()).max(1e-8) < 1e-6,
                    "({ti},{k}): {ana} vs {num}"
                );
            }
        }
    }

    #[test]
    fn rejects_bad_labels() {
        let p = Array2::from_elem((3, N_CTC), 1.0 / N_CTC as f64);
        assert!(matches!(ctc_loss(&p, "a-b"), Err(NetError::BadChar('-'))));
        assert!(matches!(ctc_loss(&p, ""), Err(NetError::EmptyLabel)));
    }
}
