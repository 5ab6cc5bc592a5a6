//! Affine layers and the additive attention unit.

use ndarray::{Array1, Array2};

use super::linalg::{matvec_t_acc, outer_acc, softmax};

/// y = W x + b, with W stored (out, in).
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    pub fn new(out: usize, input: usize) -> Self {
        Linear { w: Array2::zeros((out, input)), b: Array1::zeros(out) }
    }

    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        self.w.dot(x) + &self.b
    }

    /// Accumulates parameter gradients, adds the input gradient into `dx`.
    pub fn backward(
        &self,
        x: &Array1<f64>,
        dy: &Array1<f64>,
        grads: &mut Linear,
        dx: &mut Array1<f64>,
    ) {
        outer_acc(&mut grads.w, dy, x);
        grads.b += dy;
        matvec_t_acc(&self.w, dy, dx);
    }
}

/// Additive attention: score_i = wᵀ tanh(U q + V h_i + b).
///
/// `V h_i` is precomputed once per image; the per-step forward touches
/// only the query path and the scores.
#[derive(Debug, Clone)]
pub struct Attention {
    pub w: Array1<f64>,     // (A)
    pub u: Array2<f64>,     // (A, Q)
    pub v: Array2<f64>,     // (A, D)
    pub b: Array1<f64>,     // (A)
}

#[derive(Debug, Clone)]
pub struct AttnCache {
    pub q: Array1<f64>,
    /// tanh activations, one row per feature position (T, A).
    th: Array2<f64>,
    pub alpha: Array1<f64>,
}

impl Attention {
    pub fn new(attn_dim: usize, query_dim: usize, feat_dim: usize) -> Self {
        Attention {
            w: Array1::zeros(attn_dim),
            u: Array2::zeros((attn_dim, query_dim)),
            v: Array2::zeros((attn_dim, feat_dim)),
            b: Array1::zeros(attn_dim),
        }
    }

    /// V h_i for all positions: (T, A).
    pub fn precompute(&self, h: &Array2<f64>) -> Array2<f64> {
        h.dot(&self.v.t())
    }

    pub fn forward(&self, q: &Array1<f64>, vh: &Array2<f64>) -> (Array1<f64>, AttnCache) {
        let t = vh.nrows();
        let a = self.w.len();
        let uqb = self.u.dot(q) + &self.b;
        let mut th = Array2::<f64>::zeros((t, a));
        let mut scores = Array1::<f64>::zeros(t);
        for i in 0..t {
            let mut s = 0.0;
            for j in 0..a {
                let v = (uqb[j] + vh[(i, j)]).tanh();
                th[(i, j)] = v;
                s += self.w[j] * v;
            }
            scores[i] = s;
        }
        let alpha = softmax(&scores);
        let cache = AttnCache { q: q.clone(), th, alpha: alpha.clone() };
        (alpha, cache)
    }

    /// Backward from d(alpha). Accumulates parameter gradients, returns
    /// dq, and adds each position's gradient into `dvh`.
    pub fn backward(
        &self,
        cache: &AttnCache,
        dalpha: &Array1<f64>,
        grads: &mut Attention,
        dvh: &mut Array2<f64>,
    ) -> Array1<f64> {
        let t = cache.th.nrows();
        let a = self.w.len();
        // Softmax jacobian: ds_i = alpha_i * (dalpha_i - sum_j dalpha_j alpha_j).
        let dot = dalpha.dot(&cache.alpha);
        let mut dpre_sum = Array1::<f64>::zeros(a);
        for i in 0..t {
            let ds = cache.alpha[i] * (dalpha[i] - dot);
            if ds == 0.0 {
                continue;
            }
            for j in 0..a {
                let thv = cache.th[(i, j)];
                grads.w[j] += ds * thv;
                let dpre = ds * self.w[j] * (1.0 - thv * thv);
                dvh[(i, j)] += dpre;
                dpre_sum[j] += dpre;
            }
        }
        outer_acc(&mut grads.u, &dpre_sum, &cache.q);
        grads.b += &dpre_sum;
        let mut dq = Array1::<f64>::zeros(cache.q.len());
        matvec_t_acc(&self.u, &dpre_sum, &mut dq);
        dq
    }

    /// Fold accumulated dvh back into dv and dh (once per image).
    pub fn backward_features(
        &self,
        h: &Array2<f64>,
        dvh: &Array2<f64>,
        grads: &mut Attention,
        dh: &mut Array2<f64>,
    ) {
        grads.v += &dvh.t().dot(h);
        *dh += &dvh.dot(&self.v);
    }
}
