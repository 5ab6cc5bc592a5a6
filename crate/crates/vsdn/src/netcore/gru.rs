//! Gated recurrent cell with exact analytic backward.
//!
//! Gate layout in the stacked weight rows is [reset; update; candidate].
//! The candidate uses the reset gate on the hidden path's contribution:
//!   r = sigma(Wr x + Ur h + br), z = sigma(Wz x + Uz h + bz)
//!   n = tanh(Wn x + bn_i + r * (Un h + bn_h))
//!   h' = (1 - z) * n + z * h

use ndarray::{Array1, Array2};

use super::linalg::{matvec_t_acc, outer_acc, sigmoid};

#[derive(Debug, Clone)]
pub struct GruParams {
    pub w_ih: Array2<f64>, // (3H, I)
    pub w_hh: Array2<f64>, // (3H, H)
    pub b_ih: Array1<f64>, // 3H
    pub b_hh: Array1<f64>, // 3H
}

/// Values cached by a forward step, consumed by the backward step.
#[derive(Debug, Clone)]
pub struct GruStepCache {
    pub x: Array1<f64>,
    pub h_prev: Array1<f64>,
    r: Array1<f64>,
    z: Array1<f64>,
    n: Array1<f64>,
    gh_n: Array1<f64>,
}

impl GruParams {
    pub fn new(input: usize, hidden: usize) -> Self {
        GruParams {
            w_ih: Array2::zeros((3 * hidden, input)),
            w_hh: Array2::zeros((3 * hidden, hidden)),
            b_ih: Array1::zeros(3 * hidden),
            b_hh: Array1::zeros(3 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn input(&self) -> usize {
        self.w_ih.ncols()
    }

    pub fn step(&self, x: &Array1<f64>, h_prev: &Array1<f64>) -> (Array1<f64>, GruStepCache) {
        let hd = self.hidden();
        let gi = self.w_ih.dot(x) + &self.b_ih;
        let gh = self.w_hh.dot(h_prev) + &self.b_hh;
        let mut r = Array1::zeros(hd);
        let mut z = Array1::zeros(hd);
        let mut n = Array1::zeros(hd);
        let mut gh_n = Array1::zeros(hd);
        for i in 0..hd {
            r[i] = sigmoid(gi[i] + gh[i]);
            z[i] = sigmoid(gi[hd + i] + gh[hd + i]);
            gh_n[i] = gh[2 * hd + i];
            n[i] = (gi[2 * hd + i] + r[i] * gh_n[i]).tanh();
        }
        let mut h = Array1::zeros(hd);
        for i in 0..hd {
            h[i] = (1.0 - z[i]) * n[i] + z[i] * h_prev[i];
        }
        let cache =
            GruStepCache { x: x.clone(), h_prev: h_prev.clone(), r, z, n, gh_n };
        (h, cache)
    }

    /// Forward without caching, for inference.
    pub fn step_infer(&self, x: &Array1<f64>, h_prev: &Array1<f64>) -> Array1<f64> {
        self.step(x, h_prev).0
    }

    /// Backpropagate one step. Accumulates parameter gradients into
    /// `grads` and returns (dx, dh_prev).
    pub fn backward_step(
        &self,
        cache: &GruStepCache,
        dh: &Array1<f64>,
        grads: &mut GruParams,
    ) -> (Array1<f64>, Array1<f64>) {
        let hd = self.hidden();
        let GruStepCache { x, h_prev, r, z, n, gh_n } = cache;

        let mut dgi = Array1::<f64>::zeros(3 * hd);
        let mut dgh = Array1::<f64>::zeros(3 * hd);
        let mut dh_prev = Array1::<f64>::zeros(hd);
        for i in 0..hd {
            let dz = dh[i] * (h_prev[i] - n[i]);
            let dn = dh[i] * (1.0 - z[i]);
            dh_prev[i] = dh[i] * z[i];
            let dn_pre = dn * (1.0 - n[i] * n[i]);
            let dr = dn_pre * gh_n[i];
            let dr_pre = dr * r[i] * (1.0 - r[i]);
            let dz_pre = dz * z[i] * (1.0 - z[i]);
            dgi[i] = dr_pre;
            dgi[hd + i] = dz_pre;
            dgi[2 * hd + i] = dn_pre;
            dgh[i] = dr_pre;
            dgh[hd + i] = dz_pre;
            dgh[2 * hd + i] = dn_pre * r[i];
        }

        outer_acc(&mut grads.w_ih, &dgi, x);
        outer_acc(&mut grads.w_hh, &dgh, h_prev);
        grads.b_ih += &dgi;
        grads.b_hh += &dgh;

        let mut dx = Array1::<f64>::zeros(self.input());
        matvec_t_acc(&self.w_ih, &dgi, &mut dx);
        matvec_t_acc(&self.w_hh, &dgh, &mut dh_prev);
        (dx, dh_prev)
    }
}

/// Bidirectional GRU over a sequence; outputs are [fwd_t ; bwd_t].
#[derive(Debug, Clone)]
pub struct BiGru {
    pub fwd: GruParams,
    pub bwd: GruParams,
}

#[derive(Debug, Clone)]
pub struct BiGruCache {
    fwd: Vec<GruStepCache>,
    bwd: Vec<GruStepCache>,
}

impl BiGru {
    pub fn new(input: usize, hidden: usize) -> Self {
        BiGru { fwd: GruParams::new(input, hidden), bwd: GruParams::new(input, hidden) }
    }

    pub fn hidden(&self) -> usize {
        self.fwd.hidden()
    }

    pub fn forward(&self, xs: &[Array1<f64>]) -> (Vec<Array1<f64>>, BiGruCache) {
        let t = xs.len();
        let hd = self.hidden();
        let mut fwd_h = Vec::with_capacity(t);
        let mut fwd_c = Vec::with_capacity(t);
        let mut h = Array1::zeros(hd);
        for x in xs {
            let (nh, c) = self.fwd.step(x, &h);
            h = nh;
            fwd_h.push(h.clone());
            fwd_c.push(c);
        }
        let mut bwd_h = vec![Array1::zeros(hd); t];
        let mut bwd_c = Vec::with_capacity(t);
        let mut h = Array1::zeros(hd);
        for i in (0..t).rev() {
            let (nh, c) = self.bwd.step(&xs[i], &h);
            h = nh;
            bwd_h[i] = h.clone();
            bwd_c.push(c); // stored in reverse time order
        }
        let outs = (0..t)
            .map(|i| {
                let mut o = Array1::zeros(2 * hd);
                o.slice_mut(ndarray::s![..hd]).assign(&fwd_h[i]);
                o.slice_mut(ndarray::s![hd..]).assign(&bwd_h[i]);
                o
            })
            .collect();
        (outs, BiGruCache { fwd: fwd_c, bwd: bwd_c })
    }

    pub fn forward_infer(&self, xs: &[Array1<f64>]) -> Vec<Array1<f64>> {
        self.forward(xs).0
    }

    /// Backward over the whole sequence. `douts[t]` is the gradient of
    /// the concatenated output at t; returns per-step input gradients.
    pub fn backward(
        &self,
        cache: &BiGruCache,
        douts: &[Array1<f64>],
        grads: &mut BiGru,
    ) -> Vec<Array1<f64>> {
        let t = douts.len();
        let hd = self.hidden();
        let input = self.fwd.input();
        let mut dxs = vec![Array1::<f64>::zeros(input); t];

        let mut dh = Array1::<f64>::zeros(hd);
        for i in (0..t).rev() {
            let mut d = dh.clone();
            d += &douts[i].slice(ndarray::s![..hd]);
            let (dx, dh_prev) = self.fwd.backward_step(&cache.fwd[i], &d, &mut grads.fwd);
            dxs[i] += &dx;
            dh = dh_prev;
        }

        let mut dh = Array1::<f64>::zeros(hd);
        // bwd caches are stored with time reversed: cache.bwd[k] belongs
        // to sequence position t-1-k. Its recurrence runs from the end,
        // so unroll gradients from position 0 upward.
        for i in 0..t {
            let mut d = dh.clone();
            d += &douts[i].slice(ndarray::s![hd..]);
            let k = t - 1 - i;
            let (dx, dh_prev) = self.bwd.backward_step(&cache.bwd[k], &d, &mut grads.bwd);
            dxs[i] += &dx;
            dh = dh_prev;
        }
        dxs
    }
}
