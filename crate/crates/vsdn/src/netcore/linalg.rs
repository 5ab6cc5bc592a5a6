//! Small numeric helpers shared across the network.

use ndarray::{Array1, Array2};
use rand::Rng;

/// In-place softmax with max subtraction.
pub fn softmax_inplace(xs: &mut [f64]) {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

/// Softmax of a vector.
pub fn softmax(x: &Array1<f64>) -> Array1<f64> {
    let mut out = x.clone();
    softmax_inplace(out.as_slice_mut().unwrap());
    out
}

/// Log-softmax of a vector.
pub fn log_softmax(x: &Array1<f64>) -> Array1<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = x.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    x.mapv(|v| v - max - (lse - max))
}

/// log(exp(a) + exp(b)) tolerating -inf.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Argmax with lowest-index tie-breaking.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// Accumulate the outer product `m += a bᵀ`.
pub fn outer_acc(m: &mut Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) {
    let (rows, cols) = m.dim();
    debug_assert_eq!(rows, a.len());
    debug_assert_eq!(cols, b.len());
    let ms = m.as_slice_mut().expect("contiguous");
    let bs = b.as_slice().expect("contiguous");
    for i in 0..rows {
        let ai = a[i];
        if ai == 0.0 {
            continue;
        }
        let row = &mut ms[i * cols..(i + 1) * cols];
        for (r, &bv) in row.iter_mut().zip(bs) {
            *r += ai * bv;
        }
    }
}

/// `out += mᵀ v` without materializing the transpose.
pub fn matvec_t_acc(m: &Array2<f64>, v: &Array1<f64>, out: &mut Array1<f64>) {
    let (rows, cols) = m.dim();
    debug_assert_eq!(rows, v.len());
    debug_assert_eq!(cols, out.len());
    let ms = m.as_slice().expect("contiguous");
    let os = out.as_slice_mut().expect("contiguous");
    for i in 0..rows {
        let vi = v[i];
        if vi == 0.0 {
            continue;
        }
        let row = &ms[i * cols..(i + 1) * cols];
        for (o, &mv) in os.iter_mut().zip(row) {
            *o += vi * mv;
        }
    }
}

/// Uniform Xavier-style init for a matrix-shaped parameter.
pub fn xavier_fill(m: &mut Array2<f64>, rng: &mut impl Rng) {
    let (rows, cols) = m.dim();
    let a = (6.0 / (rows + cols) as f64).sqrt();
    for v in m.iter_mut() {
        *v = rng.random_range(-a..a);
    }
}

/// Uniform init for a vector-shaped parameter that is not a bias.
pub fn uniform_fill(v: &mut Array1<f64>, rng: &mut impl Rng) {
    let a = (3.0 / v.len() as f64).sqrt();
    for x in v.iter_mut() {
        *x = rng.random_range(-a..a);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn softmax_sums_to_one_and_orders() {
        let s = softmax(&array![1.0, 2.0, 3.0]);
        assert!((s.sum() - 1.0).abs() < 1e-12);
        assert!(s[2] > s[1] && s[1] > s[0]);
    }

    #[test]
    fn softmax_is_shift_invariant_and_stable() {
        let a = softmax(&array![1000.0, 1001.0]);
        let b = softmax(&array![0.0, 1.0]);
        assert!((a[0] - b[0]).abs() < 1e-12);
        assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn log_softmax_matches_softmax() {
        let x = array![0.3, -1.2, 2.0, 0.0];
        let ls = log_softmax(&x);
        let s = softmax(&x);
        for i in 0..4 {
            assert!((ls[i].exp() - s[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn log_add_handles_neg_inf() {
        assert_eq!(log_add(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert!((log_add(f64::NEG_INFINITY, 0.5) - 0.5).abs() < 1e-15);
        let v = log_add(0.0_f64.ln(), 1.0_f64.ln());
        assert!((v - 0.0).abs() < 1e-15);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 0.0]), 1);
        assert_eq!(argmax(&[2.0]), 0);
    }

    #[test]
    fn outer_and_transposed_matvec() {
        let mut m = Array2::<f64>::zeros((2, 3));
        outer_acc(&mut m, &array![2.0, -1.0], &array![1.0, 0.0, 3.0]);
        assert_eq!(m, array![[2.0, 0.0, 6.0], [-1.0, 0.0, -3.0]]);
        let mut out = Array1::<f64>::zeros(3);
        matvec_t_acc(&m, &array![1.0, 1.0], &mut out);
        assert_eq!(out, array![1.0, 0.0, 3.0]);
    }
}
