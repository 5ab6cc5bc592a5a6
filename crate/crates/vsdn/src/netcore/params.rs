//! Model configuration and the named parameter registry.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::charset::{N_CTC, N_DEC, N_EMBED};
use super::extractor::{ConvLayer, Extractor};
use super::gru::{BiGru, GruParams};
use super::layers::{Attention, Linear};
use super::linalg::{uniform_fill, xavier_fill};
use super::NetError;

/// What drives the visual decoder's attention query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    /// The semantic decoder's current hidden state (the decoupled design).
    Semantic,
    /// The visual decoder's previous hidden state (the classic design).
    PreviousVisual,
}

impl QueryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryMode::Semantic => "semantic",
            QueryMode::PreviousVisual => "previous_visual",
        }
    }

    pub fn parse(s: &str) -> Result<Self, NetError> {
        match s {
            "semantic" => Ok(QueryMode::Semantic),
            "previous_visual" => Ok(QueryMode::PreviousVisual),
            other => Err(NetError::Config(format!("unknown query mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub img_h: usize,
    pub img_w: usize,
    /// Decode steps; also the width of the extracted feature sequence.
    pub t_max: usize,
    /// Width D of each local visual feature.
    pub feat_dim: usize,
    /// Semantic state width.
    pub sem_dim: usize,
    /// Shared character embedding width.
    pub embed_dim: usize,
    /// Attention hidden width.
    pub attn_dim: usize,
    /// Learnable step-embedding width.
    pub step_embed_dim: usize,
    /// Conv channels per block; the last is the recurrent input width.
    pub conv_channels: Vec<usize>,
    /// CTC recurrent hidden size per direction.
    pub ctc_hidden: usize,
    /// Feed the previous symbol into the visual decoder's recurrence.
    pub coupled_baseline: bool,
    pub query_mode: QueryMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            img_h: 32,
            img_w: 96,
            t_max: 12,
            feat_dim: 96,
            sem_dim: 64,
            embed_dim: 48,
            attn_dim: 64,
            step_embed_dim: 32,
            conv_channels: vec![8, 16, 32, 48],
            ctc_hidden: 48,
            coupled_baseline: false,
            query_mode: QueryMode::Semantic,
        }
    }
}

impl ModelConfig {
    /// A minimal configuration for gradient checks and fast tests.
    pub fn tiny() -> Self {
        ModelConfig {
            img_h: 16,
            img_w: 32,
            t_max: 4,
            feat_dim: 8,
            sem_dim: 8,
            embed_dim: 8,
            attn_dim: 8,
            step_embed_dim: 8,
            conv_channels: vec![2, 3, 8],
            ctc_hidden: 4,
            coupled_baseline: false,
            query_mode: QueryMode::Semantic,
        }
    }

    /// Pool sizes per conv block: halve both dims for the first three
    /// blocks, then height only.
    pub fn pools(&self) -> Vec<(usize, usize)> {
        (0..self.conv_channels.len())
            .map(|i| if i < 3 { (2, 2) } else { (2, 1) })
            .collect()
    }

    pub fn query_core_dim(&self) -> usize {
        match self.query_mode {
            QueryMode::Semantic => self.sem_dim,
            QueryMode::PreviousVisual => self.feat_dim,
        }
    }

    pub fn vd_input_dim(&self) -> usize {
        if self.coupled_baseline {
            self.embed_dim + self.feat_dim
        } else {
            self.feat_dim
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        for (name, v) in [
            ("img_h", self.img_h),
            ("img_w", self.img_w),
            ("t_max", self.t_max),
            ("feat_dim", self.feat_dim),
            ("sem_dim", self.sem_dim),
            ("embed_dim", self.embed_dim),
            ("attn_dim", self.attn_dim),
            ("step_embed_dim", self.step_embed_dim),
            ("ctc_hidden", self.ctc_hidden),
        ] {
            if v == 0 {
                return Err(NetError::Config(format!("{name} must be positive")));
            }
        }
        if self.conv_channels.is_empty() {
            return Err(NetError::Config("conv_channels must be non-empty".into()));
        }
        if self.feat_dim % 2 != 0 {
            return Err(NetError::Config("feat_dim must be even".into()));
        }
        // Pooling arithmetic must match t_max exactly.
        let (mut h, mut w) = (self.img_h, self.img_w);
        for (i, (ph, pw)) in self.pools().into_iter().enumerate() {
            if h % ph != 0 || w % pw != 0 {
                return Err(NetError::Config(format!(
                    "pool {i} ({ph}x{pw}) does not divide feature map {h}x{w}"
                )));
            }
            h /= ph;
            w /= pw;
        }
        if h == 0 {
            return Err(NetError::Config("image height exhausted by pooling".into()));
        }
        if w != self.t_max {
            return Err(NetError::Config(format!(
                "conv stack yields {w} feature positions for width {}, t_max is {}",
                self.img_w, self.t_max
            )));
        }
        Ok(())
    }
}

/// Every learnable array of the network.
#[derive(Debug, Clone)]
pub struct Params {
    pub ext: Extractor,
    pub ctc_rnn: BiGru,
    /// The CTC classifier; its char rows are the similarity-matrix source.
    pub ctc_head: Linear,
    /// Shared character embedding table (chars + EoS/UKN/PAD + BOS).
    pub embed: Array2<f64>,
    pub se_rnn: BiGru,
    pub se_proj: Linear,
    pub sd_init_state: Linear,
    pub sd_init_word: Linear,
    pub sd_rnn: GruParams,
    pub sd_head: Linear,
    pub att: Attention,
    pub step_embed: Array2<f64>,
    pub vd_rnn: GruParams,
    pub vd_head: Linear,
    pub fuse: Linear,
}

/// Read-only view of one named parameter array.
pub enum ParamView<'a> {
    M(&'a Array2<f64>),
    V(&'a Array1<f64>),
}

pub enum ParamViewMut<'a> {
    M(&'a mut Array2<f64>),
    V(&'a mut Array1<f64>),
}

impl ParamView<'_> {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            ParamView::M(m) => m.as_slice().expect("contiguous"),
            ParamView::V(v) => v.as_slice().expect("contiguous"),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match self {
            ParamView::M(m) => m.shape().to_vec(),
            ParamView::V(v) => vec![v.len()],
        }
    }
}

impl ParamViewMut<'_> {
    pub fn as_slice_mut(&mut self) -> &mut [f64] {
        match self {
            ParamViewMut::M(m) => m.as_slice_mut().expect("contiguous"),
            ParamViewMut::V(v) => v.as_slice_mut().expect("contiguous"),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match self {
            ParamViewMut::M(m) => m.shape().to_vec(),
            ParamViewMut::V(v) => vec![v.len()],
        }
    }
}

fn gru_views<'a>(out: &mut Vec<(String, ParamView<'a>)>, name: &str, g: &'a GruParams) {
    out.push((format!("{name}.w_ih"), ParamView::M(&g.w_ih)));
    out.push((format!("{name}.w_hh"), ParamView::M(&g.w_hh)));
    out.push((format!("{name}.b_ih"), ParamView::V(&g.b_ih)));
    out.push((format!("{name}.b_hh"), ParamView::V(&g.b_hh)));
}

fn gru_views_mut<'a>(out: &mut Vec<(String, ParamViewMut<'a>)>, name: &str, g: &'a mut GruParams) {
    let GruParams { w_ih, w_hh, b_ih, b_hh } = g;
    out.push((format!("{name}.w_ih"), ParamViewMut::M(w_ih)));
    out.push((format!("{name}.w_hh"), ParamViewMut::M(w_hh)));
    out.push((format!("{name}.b_ih"), ParamViewMut::V(b_ih)));
    out.push((format!("{name}.b_hh"), ParamViewMut::V(b_hh)));
}

fn linear_views<'a>(out: &mut Vec<(String, ParamView<'a>)>, name: &str, l: &'a Linear) {
    out.push((format!("{name}.w"), ParamView::M(&l.w)));
    out.push((format!("{name}.b"), ParamView::V(&l.b)));
}

fn linear_views_mut<'a>(out: &mut Vec<(String, ParamViewMut<'a>)>, name: &str, l: &'a mut Linear) {
    let Linear { w, b } = l;
    out.push((format!("{name}.w"), ParamViewMut::M(w)));
    out.push((format!("{name}.b"), ParamViewMut::V(b)));
}

impl Params {
    /// All-zero parameters with the shapes implied by `cfg`.
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let mut convs = Vec::new();
        let mut c_in = 1;
        for &c_out in &cfg.conv_channels {
            convs.push(ConvLayer::new(c_in, c_out));
            c_in = c_out;
        }
        let ext = Extractor {
            convs,
            pools: cfg.pools(),
            rnn: BiGru::new(c_in, cfg.feat_dim / 2),
        };
        Params {
            ext,
            ctc_rnn: BiGru::new(cfg.feat_dim, cfg.ctc_hidden),
            ctc_head: Linear::new(N_CTC, 2 * cfg.ctc_hidden),
            embed: Array2::zeros((N_EMBED, cfg.embed_dim)),
            se_rnn: BiGru::new(cfg.embed_dim, cfg.sem_dim),
            se_proj: Linear::new(cfg.sem_dim, 2 * cfg.sem_dim),
            sd_init_state: Linear::new(cfg.sem_dim, cfg.sem_dim),
            sd_init_word: Linear::new(cfg.sem_dim, cfg.sem_dim),
            sd_rnn: GruParams::new(cfg.embed_dim + cfg.sem_dim, cfg.sem_dim),
            sd_head: Linear::new(N_DEC, cfg.sem_dim),
            att: Attention::new(
                cfg.attn_dim,
                cfg.query_core_dim() + cfg.step_embed_dim,
                cfg.feat_dim,
            ),
            step_embed: Array2::zeros((cfg.t_max, cfg.step_embed_dim)),
            vd_rnn: GruParams::new(cfg.vd_input_dim(), cfg.feat_dim),
            vd_head: Linear::new(N_DEC, cfg.feat_dim),
            fuse: Linear::new(N_DEC, cfg.feat_dim + cfg.sem_dim),
        }
    }

    /// Deterministic random initialization: Xavier-uniform matrices,
    /// zero biases, uniform non-bias vectors.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut p = Self::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, mut view) in p.fields_mut() {
            let is_bias = name.ends_with(".b") || name.ends_with(".b_ih") || name.ends_with(".b_hh");
            match &mut view {
                ParamViewMut::M(m) => xavier_fill(m, &mut rng),
                ParamViewMut::V(v) => {
                    if is_bias {
                        v.fill(0.0);
                    } else {
                        uniform_fill(v, &mut rng);
                    }
                }
            }
        }
        p
    }

    /// Named read views in a stable order.
    pub fn fields(&self) -> Vec<(String, ParamView<'_>)> {
        let mut out = Vec::with_capacity(48);
        for (i, conv) in self.ext.convs.iter().enumerate() {
            out.push((format!("ext.conv{i}.w"), ParamView::M(&conv.w)));
            out.push((format!("ext.conv{i}.b"), ParamView::V(&conv.b)));
        }
        gru_views(&mut out, "ext.rnn.fwd", &self.ext.rnn.fwd);
        gru_views(&mut out, "ext.rnn.bwd", &self.ext.rnn.bwd);
        gru_views(&mut out, "ctc.rnn.fwd", &self.ctc_rnn.fwd);
        gru_views(&mut out, "ctc.rnn.bwd", &self.ctc_rnn.bwd);
        linear_views(&mut out, "ctc.head", &self.ctc_head);
        out.push(("sem.embed".to_string(), ParamView::M(&self.embed)));
        gru_views(&mut out, "sem.enc.rnn.fwd", &self.se_rnn.fwd);
        gru_views(&mut out, "sem.enc.rnn.bwd", &self.se_rnn.bwd);
        linear_views(&mut out, "sem.enc.proj", &self.se_proj);
        linear_views(&mut out, "sem.dec.init_state", &self.sd_init_state);
        linear_views(&mut out, "sem.dec.init_word", &self.sd_init_word);
        gru_views(&mut out, "sem.dec.rnn", &self.sd_rnn);
        linear_views(&mut out, "sem.dec.head", &self.sd_head);
        out.push(("vd.att.w".to_string(), ParamView::V(&self.att.w)));
        out.push(("vd.att.u".to_string(), ParamView::M(&self.att.u)));
        out.push(("vd.att.v".to_string(), ParamView::M(&self.att.v)));
        out.push(("vd.att.b".to_string(), ParamView::V(&self.att.b)));
        out.push(("vd.step_embed".to_string(), ParamView::M(&self.step_embed)));
        gru_views(&mut out, "vd.rnn", &self.vd_rnn);
        linear_views(&mut out, "vd.head", &self.vd_head);
        linear_views(&mut out, "fuse", &self.fuse);
        out
    }

    /// Named mutable views in the same order as [`Params::fields`].
    pub fn fields_mut(&mut self) -> Vec<(String, ParamViewMut<'_>)> {
        let Params {
            ext,
            ctc_rnn,
            ctc_head,
            embed,
            se_rnn,
            se_proj,
            sd_init_state,
            sd_init_word,
            sd_rnn,
            sd_head,
            att,
            step_embed,
            vd_rnn,
            vd_head,
            fuse,
        } = self;
        let mut out = Vec::with_capacity(48);
        for (i, conv) in ext.convs.iter_mut().enumerate() {
            let ConvLayer { w, b } = conv;
            out.push((format!("ext.conv{i}.w"), ParamViewMut::M(w)));
            out.push((format!("ext.conv{i}.b"), ParamViewMut::V(b)));
        }
        gru_views_mut(&mut out, "ext.rnn.fwd", &mut ext.rnn.fwd);
        gru_views_mut(&mut out, "ext.rnn.bwd", &mut ext.rnn.bwd);
        gru_views_mut(&mut out, "ctc.rnn.fwd", &mut ctc_rnn.fwd);
        gru_views_mut(&mut out, "ctc.rnn.bwd", &mut ctc_rnn.bwd);
        linear_views_mut(&mut out, "ctc.head", ctc_head);
        out.push(("sem.embed".to_string(), ParamViewMut::M(embed)));
        gru_views_mut(&mut out, "sem.enc.rnn.fwd", &mut se_rnn.fwd);
        gru_views_mut(&mut out, "sem.enc.rnn.bwd", &mut se_rnn.bwd);
        linear_views_mut(&mut out, "sem.enc.proj", se_proj);
        linear_views_mut(&mut out, "sem.dec.init_state", sd_init_state);
        linear_views_mut(&mut out, "sem.dec.init_word", sd_init_word);
        gru_views_mut(&mut out, "sem.dec.rnn", sd_rnn);
        linear_views_mut(&mut out, "sem.dec.head", sd_head);
        let Attention { w, u, v, b } = att;
        out.push(("vd.att.w".to_string(), ParamViewMut::V(w)));
        out.push(("vd.att.u".to_string(), ParamViewMut::M(u)));
        out.push(("vd.att.v".to_string(), ParamViewMut::M(v)));
        out.push(("vd.att.b".to_string(), ParamViewMut::V(b)));
        out.push(("vd.step_embed".to_string(), ParamViewMut::M(step_embed)));
        gru_views_mut(&mut out, "vd.rnn", vd_rnn);
        linear_views_mut(&mut out, "vd.head", vd_head);
        linear_views_mut(&mut out, "fuse", fuse);
        out
    }

    pub fn n_arrays(&self) -> usize {
        self.fields().len()
    }

    pub fn n_scalars(&self) -> usize {
        self.fields().iter().map(|(_, v)| v.as_slice().len()).sum()
    }

    /// Elementwise accumulate: `self += other`.
    pub fn add_assign(&mut self, other: &Params) {
        let mut mine = self.fields_mut();
        let theirs = other.fields();
        for ((na, va), (nb, vb)) in mine.iter_mut().zip(theirs.iter()) {
            debug_assert_eq!(na, nb);
            let a = va.as_slice_mut();
            let b = vb.as_slice();
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Multiply every parameter by a scalar.
    pub fn scale(&mut self, factor: f64) {
        for (_, mut v) in self.fields_mut() {
            for x in v.as_slice_mut() {
                *x *= factor;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.fields().iter().all(|(_, v)| v.as_slice().iter().all(|x| x.is_finite()))
    }

    /// The CTC classifier's character rows (blank excluded), the weight
    /// source for the visual similarity matrix.
    pub fn ctc_char_weight_rows(&self) -> Array2<f64> {
        self.ctc_head.w.slice(ndarray::s![..crate::charset::N_VIS, ..]).to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_and_tiny_configs_validate() {
        ModelConfig::default().validate().unwrap();
        ModelConfig::tiny().validate().unwrap();
    }

    #[test]
    fn bad_geometry_is_rejected() {
        let cfg = ModelConfig { img_w: 100, ..ModelConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = ModelConfig { t_max: 10, ..ModelConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn field_listing_is_stable_and_complete() {
        let cfg = ModelConfig::tiny();
        let p = Params::zeros(&cfg);
        let names: Vec<String> = p.fields().into_iter().map(|(n, _)| n).collect();
        // One entry per learnable array, no duplicates.
        let unique: std::collections::HashSet<&String> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
        for expect in [
            "ext.conv0.w",
            "ext.rnn.fwd.w_ih",
            "ctc.head.w",
            "sem.embed",
            "sem.enc.proj.w",
            "sem.dec.init_state.w",
            "sem.dec.init_word.w",
            "sem.dec.rnn.w_hh",
            "sem.dec.head.w",
            "vd.att.w",
            "vd.att.u",
            "vd.att.v",
            "vd.att.b",
            "vd.step_embed",
            "vd.rnn.w_ih",
            "vd.head.w",
            "fuse.w",
        ] {
            assert!(names.iter().any(|n| n == expect), "missing {expect}");
        }
        let mut p2 = p.clone();
        let names2: Vec<String> = p2.fields_mut().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, names2);
    }

    #[test]
    fn init_is_deterministic_and_biases_zero() {
        let cfg = ModelConfig::tiny();
        let a = Params::init(&cfg, 5);
        let b = Params::init(&cfg, 5);
        let c = Params::init(&cfg, 6);
        for ((na, va), (_, vb)) in a.fields().iter().zip(b.fields().iter()) {
            assert_eq!(va.as_slice(), vb.as_slice(), "{na}");
        }
        let differs = a
            .fields()
            .iter()
            .zip(c.fields().iter())
            .any(|((_, va), (_, vc))| va.as_slice() != vc.as_slice());
        assert!(differs);
        for (name, v) in a.fields() {
            if name.ends_with(".b") || name.ends_with(".b_ih") || name.ends_with(".b_hh") {
                assert!(v.as_slice().iter().all(|&x| x == 0.0), "{name} not zero");
            }
        }
        assert!(a.all_finite());
    }

    #[test]
    fn coupled_and_query_modes_change_shapes() {
        let base = ModelConfig::tiny();
        let coupled = ModelConfig { coupled_baseline: true, ..base.clone() };
        let prev = ModelConfig { query_mode: QueryMode::PreviousVisual, ..base.clone() };
        let p0 = Params::zeros(&base);
        let p1 = Params::zeros(&coupled);
        let p2 = Params::zeros(&prev);
        assert_eq!(p1.vd_rnn.input(), base.embed_dim + base.feat_dim);
        assert_eq!(p0.vd_rnn.input(), base.feat_dim);
        assert_eq!(p2.att.u.ncols(), base.feat_dim + base.step_embed_dim);
        assert_eq!(p0.att.u.ncols(), base.sem_dim + base.step_embed_dim);
    }
}
