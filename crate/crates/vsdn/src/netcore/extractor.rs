//! Shared visual feature extractor: a small conv/pool stack whose height
//! is squeezed away, followed by one bidirectional recurrent layer over
//! the width dimension.

use ndarray::{Array1, Array2, Array3};

use super::gru::{BiGru, BiGruCache};
use super::NetError;

/// One 3x3 (pad 1, stride 1) convolution with bias, stored flat for gemm.
#[derive(Debug, Clone)]
pub struct ConvLayer {
    /// (C_out, C_in * 9)
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl ConvLayer {
    pub fn new(c_in: usize, c_out: usize) -> Self {
        ConvLayer { w: Array2::zeros((c_out, c_in * 9)), b: Array1::zeros(c_out) }
    }

    pub fn c_out(&self) -> usize {
        self.w.nrows()
    }

    pub fn c_in(&self) -> usize {
        self.w.ncols() / 9
    }
}

/// 3x3 patches of `x` as columns: (C_in*9, H*W).
fn im2col(x: &Array3<f64>) -> Array2<f64> {
    let (c_in, h, w) = x.dim();
    let mut col = Array2::<f64>::zeros((c_in * 9, h * w));
    for ci in 0..c_in {
        for ky in 0..3usize {
            for kx in 0..3usize {
                let row = ci * 9 + ky * 3 + kx;
                let mut out_row = col.row_mut(row);
                let out = out_row.as_slice_mut().unwrap();
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for x_ in 0..w {
                        let sx = x_ as isize + kx as isize - 1;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        out[y * w + x_] = x[(ci, sy as usize, sx as usize)];
                    }
                }
            }
        }
    }
    col
}

/// Scatter column gradients back to image layout.
fn col2im(dcol: &Array2<f64>, c_in: usize, h: usize, w: usize) -> Array3<f64> {
    let mut dx = Array3::<f64>::zeros((c_in, h, w));
    for ci in 0..c_in {
        for ky in 0..3usize {
            for kx in 0..3usize {
                let row = dcol.row(row_index(ci, ky, kx));
                let row = row.as_slice().unwrap();
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for x_ in 0..w {
                        let sx = x_ as isize + kx as isize - 1;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        dx[(ci, sy as usize, sx as usize)] += row[y * w + x_];
                    }
                }
            }
        }
    }
    dx
}

fn row_index(ci: usize, ky: usize, kx: usize) -> usize {
    ci * 9 + ky * 3 + kx
}

struct BlockCache {
    col: Array2<f64>,
    /// Post-relu activations before pooling (C, H, W).
    relu: Array3<f64>,
    /// Flat argmax index (y*w + x) per pooled cell.
    pool_idx: Array3<usize>,
    in_dim: (usize, usize, usize),
}

/// Caches for a full extractor forward.
pub struct ExtractorCache {
    blocks: Vec<BlockCache>,
    /// Conv output after all blocks (C, Hf, Wf).
    final_map_dim: (usize, usize, usize),
    rnn: BiGruCache,
}

/// The conv/pool + BiGRU extractor.
#[derive(Debug, Clone)]
pub struct Extractor {
    pub convs: Vec<ConvLayer>,
    pub pools: Vec<(usize, usize)>,
    pub rnn: BiGru,
}

impl Extractor {
    /// Output (T, D) for an input of the given geometry, or an error when
    /// the pooling arithmetic does not divide evenly.
    pub fn output_shape(&self, height: usize, width: usize) -> Result<(usize, usize), NetError> {
        let (mut h, mut w) = (height, width);
        for (i, &(ph, pw)) in self.pools.iter().enumerate() {
            if h % ph != 0 || w % pw != 0 {
                return Err(NetError::Config(format!(
                    "pool {i} ({ph}x{pw}) does not divide feature map {h}x{w}"
                )));
            }
            h /= ph;
            w /= pw;
        }
        if h == 0 || w == 0 {
            return Err(NetError::Config("feature map collapsed to zero".into()));
        }
        Ok((w, 2 * self.rnn.hidden()))
    }

    pub fn forward(&self, image: &Array2<f64>) -> (Array2<f64>, ExtractorCache) {
        let (h0, w0) = image.dim();
        let mut x = Array3::<f64>::zeros((1, h0, w0));
        x.index_axis_mut(ndarray::Axis(0), 0).assign(image);

        let mut blocks = Vec::with_capacity(self.convs.len());
        for (conv, &(ph, pw)) in self.convs.iter().zip(&self.pools) {
            let (c_in, h, w) = x.dim();
            debug_assert_eq!(c_in, conv.c_in());
            let col = im2col(&x);
            let mut out = conv.w.dot(&col); // (C_out, H*W)
            for (mut row, &bv) in out.rows_mut().into_iter().zip(conv.b.iter()) {
                row.mapv_inplace(|v| (v + bv).max(0.0));
            }
            let relu = out.into_shape_with_order((conv.c_out(), h, w)).unwrap();
            // Non-overlapping max pool, first index wins on ties.
            let (hp, wp) = (h / ph, w / pw);
            let mut pooled = Array3::<f64>::zeros((conv.c_out(), hp, wp));
            let mut pool_idx = Array3::<usize>::zeros((conv.c_out(), hp, wp));
            for c in 0..conv.c_out() {
                for py in 0..hp {
                    for px in 0..wp {
                        let mut best = f64::NEG_INFINITY;
                        let mut best_i = 0;
                        for dy in 0..ph {
                            for dx in 0..pw {
                                let (y, xx) = (py * ph + dy, px * pw + dx);
                                let v = relu[(c, y, xx)];
                                if v > best {
                                    best = v;
                                    best_i = y * w + xx;
                                }
                            }
                        }
                        pooled[(c, py, px)] = best;
                        pool_idx[(c, py, px)] = best_i;
                    }
                }
            }
            blocks.push(BlockCache { col, relu, pool_idx, in_dim: (c_in, h, w) });
            x = pooled;
        }

        // Squeeze height by averaging, walk the width as a sequence.
        let (c, hf, wf) = x.dim();
        let mut seq = Vec::with_capacity(wf);
        for t in 0..wf {
            let mut v = Array1::<f64>::zeros(c);
            for ci in 0..c {
                let mut acc = 0.0;
                for y in 0..hf {
                    acc += x[(ci, y, t)];
                }
                v[ci] = acc / hf as f64;
            }
            seq.push(v);
        }

        let (outs, rnn_cache) = self.rnn.forward(&seq);
        let d = 2 * self.rnn.hidden();
        let mut feats = Array2::<f64>::zeros((wf, d));
        for (t, o) in outs.iter().enumerate() {
            feats.row_mut(t).assign(o);
        }
        let cache = ExtractorCache { blocks, final_map_dim: (c, hf, wf), rnn: rnn_cache };
        (feats, cache)
    }

    /// Backward from d(features) (T, D). Returns nothing: the image is
    /// data, not a parameter.
    pub fn backward(&self, cache: &ExtractorCache, dfeats: &Array2<f64>, grads: &mut Extractor) {
        let t = dfeats.nrows();
        let douts: Vec<Array1<f64>> =
            (0..t).map(|i| dfeats.row(i).to_owned()).collect();
        let dseq = self.rnn.backward(&cache.rnn, &douts, &mut grads.rnn);

        let (c, hf, wf) = cache.final_map_dim;
        let mut dmap = Array3::<f64>::zeros((c, hf, wf));
        for (ti, dv) in dseq.iter().enumerate() {
            for ci in 0..c {
                let g = dv[ci] / hf as f64;
                for y in 0..hf {
                    dmap[(ci, y, ti)] += g;
                }
            }
        }

        for (bi, block) in cache.blocks.iter().enumerate().rev() {
            let conv = &self.convs[bi];
            let (c_in, h, w) = block.in_dim;
            let c_out = conv.c_out();
            // Un-pool: route gradient to the argmax cell.
            let mut drelu = Array2::<f64>::zeros((c_out, h * w));
            let (_, hp, wp) = block.pool_idx.dim();
            for ci in 0..c_out {
                for py in 0..hp {
                    for px in 0..wp {
                        drelu[(ci, block.pool_idx[(ci, py, px)])] += dmap[(ci, py, px)];
                    }
                }
            }
            // Relu mask.
            let relu_flat = block.relu.view().into_shape_with_order((c_out, h * w)).unwrap();
            for ci in 0..c_out {
                for i in 0..h * w {
                    if relu_flat[(ci, i)] <= 0.0 {
                        drelu[(ci, i)] = 0.0;
                    }
                }
            }
            grads.convs[bi].w += &drelu.dot(&block.col.t());
            for (ci, row) in drelu.rows().into_iter().enumerate() {
                grads.convs[bi].b[ci] += row.sum();
            }
            if bi > 0 {
                let dcol = conv.w.t().dot(&drelu);
                let dx = col2im(&dcol, c_in, h, w);
                dmap = dx;
            }
        }
    }
}
