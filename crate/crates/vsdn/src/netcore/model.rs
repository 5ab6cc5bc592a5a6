//! The full network: decode pipeline, branch losses and exact backward.

use ndarray::{Array1, Array2};

use crate::charset::{self, BOS, EOS, N_EMBED, PAD, UKN};
use super::ctc::{ctc_greedy_decode, ctc_loss_grad_logp};
use super::extractor::ExtractorCache;
use super::gru::GruStepCache;
use super::layers::AttnCache;
use super::linalg::{argmax, log_softmax, outer_acc, softmax};
use super::params::{ModelConfig, Params, QueryMode};
use super::NetError;

/// Per-branch loss weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub ctc: f64,
    pub visual: f64,
    pub semantic: f64,
    pub fused: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { ctc: 1.0, visual: 1.0, semantic: 0.2, fused: 1.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), NetError> {
        if [self.ctc, self.visual, self.semantic, self.fused].iter().any(|&w| w < 0.0) {
            return Err(NetError::Config("loss weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Unweighted per-branch losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchLosses {
    pub ctc: f64,
    pub visual: f64,
    pub semantic: f64,
    pub fused: f64,
}

impl BranchLosses {
    pub fn weighted_total(&self, w: &LossWeights) -> f64 {
        w.ctc * self.ctc + w.visual * self.visual + w.semantic * self.semantic
            + w.fused * self.fused
    }

    /// Name of the first non-finite branch, if any.
    pub fn non_finite_branch(&self) -> Option<&'static str> {
        for (name, v) in [
            ("ctc", self.ctc),
            ("visual", self.visual),
            ("semantic", self.semantic),
            ("fused", self.fused),
        ] {
            if !v.is_finite() {
                return Some(name);
            }
        }
        None
    }
}

/// One decode step of the trace.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub alpha: Array1<f64>,
    pub glimpse: Array1<f64>,
    pub s_v: Array1<f64>,
    pub s_s: Array1<f64>,
    pub vd_probs: Array1<f64>,
    pub sd_probs: Array1<f64>,
    pub fused_probs: Array1<f64>,
    /// Fused-head argmax at this step.
    pub symbol: usize,
}

/// Everything observable about one decode.
#[derive(Debug, Clone)]
pub struct DecodeTrace {
    /// CTC probability sequence (T, 37).
    pub coarse_probs: Array2<f64>,
    /// Greedy CTC string.
    pub coarse: String,
    pub steps: Vec<TraceStep>,
    pub teacher_forced: bool,
}

impl DecodeTrace {
    /// Emitted text: characters before the first EoS; UKN/PAD are skipped.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            if s.symbol == EOS {
                break;
            }
            if s.symbol < charset::N_VIS {
                out.push(charset::index_char(s.symbol));
            }
        }
        out
    }

    /// The visual head's own string (argmax per step up to its first EoS).
    pub fn visual_text(&self) -> String {
        branch_text(self.steps.iter().map(|s| argmax(s.vd_probs.as_slice().unwrap())))
    }

    /// The semantic head's greedy string.
    pub fn semantic_text(&self) -> String {
        branch_text(self.steps.iter().map(|s| argmax(s.sd_probs.as_slice().unwrap())))
    }
}

fn branch_text(symbols: impl Iterator<Item = usize>) -> String {
    let mut out = String::new();
    for sym in symbols {
        if sym == EOS {
            break;
        }
        if sym < charset::N_VIS {
            out.push(charset::index_char(sym));
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub enum DecodeMode<'a> {
    TeacherForcing(&'a str),
    FreeRunning,
}

/// Model = configuration + parameters.
#[derive(Debug, Clone)]
pub struct Model {
    pub cfg: ModelConfig,
    pub params: Params,
}

struct StepTape {
    y_prev: usize,
    sd_gru: GruStepCache,
    s_s: Array1<f64>,
    sd_probs: Array1<f64>,
    att: AttnCache,
    vd_gru: GruStepCache,
    s_v: Array1<f64>,
    vd_probs: Array1<f64>,
    fuse_in: Array1<f64>,
    fused_probs: Array1<f64>,
    target: usize,
}

/// Forward caches plus losses for one teacher-forced training example.
pub struct TrainStep {
    pub losses: BranchLosses,
    pub coarse: String,
    pub label_idx: Vec<usize>,
    ext_cache: ExtractorCache,
    h: Array2<f64>,
    vh: Array2<f64>,
    ctc_rnn_cache: super::gru::BiGruCache,
    ctc_rnn_outs: Vec<Array1<f64>>,
    ctc_probs: Array2<f64>,
    ctc_dlogp: Array2<f64>,
    se_chars: Vec<usize>,
    se_rnn_cache: super::gru::BiGruCache,
    se_mean: Array1<f64>,
    s_g: Array1<f64>,
    steps: Vec<StepTape>,
}

impl Model {
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Self, NetError> {
        cfg.validate()?;
        let params = Params::init(&cfg, seed);
        Ok(Model { cfg, params })
    }

    pub fn from_parts(cfg: ModelConfig, params: Params) -> Result<Self, NetError> {
        cfg.validate()?;
        Ok(Model { cfg, params })
    }

    fn check_geometry(&self, image: &Array2<f64>) -> Result<(), NetError> {
        let (h, w) = image.dim();
        if h != self.cfg.img_h || w != self.cfg.img_w {
            return Err(NetError::GeometryMismatch {
                expected: (self.cfg.img_h, self.cfg.img_w),
                actual: (h, w),
            });
        }
        Ok(())
    }

    /// Local visual feature sequence (T, D) for an image.
    pub fn extract_features(&self, image: &Array2<f64>) -> Result<Array2<f64>, NetError> {
        self.check_geometry(image)?;
        Ok(self.params.ext.forward(image).0)
    }

    /// CTC probability sequence (T, 37), each row a distribution.
    pub fn ctc_probs(&self, h: &Array2<f64>) -> Array2<f64> {
        let xs: Vec<Array1<f64>> = h.rows().into_iter().map(|r| r.to_owned()).collect();
        let outs = self.params.ctc_rnn.forward_infer(&xs);
        let mut p = Array2::zeros((h.nrows(), charset::N_CTC));
        for (t, o) in outs.iter().enumerate() {
            p.row_mut(t).assign(&softmax(&self.params.ctc_head.forward(o)));
        }
        p
    }

    /// Map text to embedding-table indices, unknown characters to UKN.
    pub fn text_to_indices(text: &str) -> Vec<usize> {
        text.chars().map(|c| charset::char_index(c).unwrap_or(UKN)).collect()
    }

    fn pad_se_input(&self, chars: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = chars.iter().take(self.cfg.t_max).copied().collect();
        while out.len() < self.cfg.t_max {
            out.push(PAD);
        }
        out
    }

    fn se_forward(
        &self,
        chars: &[usize],
    ) -> (Array1<f64>, Vec<usize>, super::gru::BiGruCache, Array1<f64>) {
        let padded = self.pad_se_input(chars);
        let xs: Vec<Array1<f64>> =
            padded.iter().map(|&c| self.params.embed.row(c).to_owned()).collect();
        let (outs, cache) = self.params.se_rnn.forward(&xs);
        let mut mean = Array1::<f64>::zeros(2 * self.cfg.sem_dim);
        for o in &outs {
            mean += o;
        }
        mean /= outs.len() as f64;
        let s_g = self.params.se_proj.forward(&mean);
        (s_g, padded, cache, mean)
    }

    /// Global semantic embedding of a text string.
    pub fn semantic_encode(&self, text: &str) -> Array1<f64> {
        let chars = Self::text_to_indices(text);
        self.se_forward(&chars).0
    }

    /// Initial semantic state and the constant word embedding.
    pub fn sd_init(&self, s_g: &Array1<f64>) -> (Array1<f64>, Array1<f64>) {
        (self.params.sd_init_state.forward(s_g), self.params.sd_init_word.forward(s_g))
    }

    /// One semantic-decoder recurrence step.
    pub fn sd_step(
        &self,
        s_prev: &Array1<f64>,
        y_prev: usize,
        e_w: &Array1<f64>,
    ) -> Result<Array1<f64>, NetError> {
        if y_prev >= N_EMBED {
            return Err(NetError::UnknownSymbol(y_prev));
        }
        let x = concat(&self.params.embed.row(y_prev).to_owned(), e_w);
        Ok(self.params.sd_rnn.step_infer(&x, s_prev))
    }

    /// Semantic-head distribution over the 39 decoder classes.
    pub fn sd_classify(&self, s_t: &Array1<f64>) -> Array1<f64> {
        softmax(&self.params.sd_head.forward(s_t))
    }

    /// Attention weights for step `t` given the query core (semantic
    /// state, or previous visual state in the ablated mode).
    pub fn vd_attend(
        &self,
        query_core: &Array1<f64>,
        t: usize,
        h: &Array2<f64>,
    ) -> Result<Array1<f64>, NetError> {
        if t >= self.cfg.t_max {
            return Err(NetError::Shape(format!("step {t} exceeds t_max {}", self.cfg.t_max)));
        }
        if query_core.len() != self.cfg.query_core_dim() {
            return Err(NetError::Shape(format!(
                "query core has dim {}, mode {:?} needs {}",
                query_core.len(),
                self.cfg.query_mode,
                self.cfg.query_core_dim()
            )));
        }
        let vh = self.params.att.precompute(h);
        let q = concat(query_core, &self.params.step_embed.row(t).to_owned());
        Ok(self.params.att.forward(&q, &vh).0)
    }

    /// Glimpse and visual state update. `y_prev` participates only in the
    /// coupled baseline.
    pub fn vd_step(
        &self,
        alpha: &Array1<f64>,
        h: &Array2<f64>,
        s_prev: &Array1<f64>,
        y_prev: Option<usize>,
    ) -> Result<(Array1<f64>, Array1<f64>), NetError> {
        let g = h.t().dot(alpha);
        let x = if self.cfg.coupled_baseline {
            let y = y_prev.ok_or(NetError::Config(
                "coupled baseline needs the previous symbol".into(),
            ))?;
            if y >= N_EMBED {
                return Err(NetError::UnknownSymbol(y));
            }
            concat(&self.params.embed.row(y).to_owned(), &g)
        } else {
            g.clone()
        };
        let s_v = self.params.vd_rnn.step_infer(&x, s_prev);
        Ok((g, s_v))
    }

    /// Fused distribution over the 39 decoder classes.
    pub fn fuse_probs(&self, s_v: &Array1<f64>, s_s: &Array1<f64>) -> Array1<f64> {
        softmax(&self.params.fuse.forward(&concat(s_v, s_s)))
    }

    /// Run the full pipeline on one image.
    pub fn decode_sequence(
        &self,
        image: &Array2<f64>,
        mode: DecodeMode<'_>,
    ) -> Result<DecodeTrace, NetError> {
        self.check_geometry(image)?;
        let label_idx = match mode {
            DecodeMode::TeacherForcing(label) => {
                let idx = charset::encode_label(label).map_err(NetError::BadChar)?;
                if idx.is_empty() {
                    return Err(NetError::EmptyLabel);
                }
                if idx.len() + 1 > self.cfg.t_max {
                    return Err(NetError::LabelTooLong {
                        len: idx.len(),
                        max: self.cfg.t_max - 1,
                    });
                }
                Some(idx)
            }
            DecodeMode::FreeRunning => None,
        };

        let h = self.params.ext.forward(image).0;
        let coarse_probs = self.ctc_probs(&h);
        let coarse = ctc_greedy_decode(&coarse_probs);
        let se_chars = Self::text_to_indices(&coarse);
        let (s_g, ..) = self.se_forward(&se_chars);
        let (mut s_s, e_w) = self.sd_init(&s_g);
        let mut s_v = Array1::<f64>::zeros(self.cfg.feat_dim);
        let vh = self.params.att.precompute(&h);

        let n_steps = match &label_idx {
            Some(idx) => idx.len() + 1,
            None => self.cfg.t_max,
        };
        let mut steps = Vec::with_capacity(n_steps);
        let mut y_prev = BOS;
        for t in 0..n_steps {
            let x_sd = concat(&self.params.embed.row(y_prev).to_owned(), &e_w);
            let s_s_new = self.params.sd_rnn.step_infer(&x_sd, &s_s);
            let sd_probs = self.sd_classify(&s_s_new);
            let query_core = match self.cfg.query_mode {
                QueryMode::Semantic => &s_s_new,
                QueryMode::PreviousVisual => &s_v,
            };
            let q = concat(query_core, &self.params.step_embed.row(t).to_owned());
            let (alpha, _) = self.params.att.forward(&q, &vh);
            let (g, s_v_new) = self.vd_step(&alpha, &h, &s_v, Some(y_prev))?;
            let vd_probs = softmax(&self.params.vd_head.forward(&s_v_new));
            let fused_probs = self.fuse_probs(&s_v_new, &s_s_new);
            let symbol = argmax(fused_probs.as_slice().unwrap());
            steps.push(TraceStep {
                alpha,
                glimpse: g,
                s_v: s_v_new.clone(),
                s_s: s_s_new.clone(),
                vd_probs,
                sd_probs,
                fused_probs,
                symbol,
            });
            s_s = s_s_new;
            s_v = s_v_new;
            y_prev = match &label_idx {
                Some(idx) => {
                    if t < idx.len() {
                        idx[t]
                    } else {
                        EOS
                    }
                }
                None => symbol,
            };
            if label_idx.is_none() && symbol == EOS {
                break;
            }
        }

        Ok(DecodeTrace {
            coarse_probs,
            coarse,
            steps,
            teacher_forced: label_idx.is_some(),
        })
    }

    /// The four-branch objective on a teacher-forced trace. The three
    /// attention-decoder branches are mean cross-entropies over the
    /// label-plus-EoS steps; PAD targets are masked out.
    pub fn total_loss(
        &self,
        trace: &DecodeTrace,
        label: &str,
        weights: &LossWeights,
    ) -> Result<f64, NetError> {
        weights.validate()?;
        let losses = self.branch_losses(trace, label)?;
        if let Some(branch) = losses.non_finite_branch() {
            return Err(NetError::NonFinite { branch });
        }
        let total = losses.weighted_total(weights);
        if !total.is_finite() {
            return Err(NetError::NonFinite { branch: "total" });
        }
        Ok(total)
    }

    /// Unweighted branch losses for a teacher-forced trace.
    pub fn branch_losses(
        &self,
        trace: &DecodeTrace,
        label: &str,
    ) -> Result<BranchLosses, NetError> {
        if !trace.teacher_forced {
            return Err(NetError::NeedTeacherForced);
        }
        let idx = charset::encode_label(label).map_err(NetError::BadChar)?;
        if trace.steps.len() != idx.len() + 1 {
            return Err(NetError::Shape(format!(
                "trace has {} steps, label needs {}",
                trace.steps.len(),
                idx.len() + 1
            )));
        }
        let ctc = super::ctc::ctc_loss(&trace.coarse_probs, label)?;
        let (mut lv, mut ls, mut lf) = (0.0, 0.0, 0.0);
        let mut n = 0usize;
        for (t, step) in trace.steps.iter().enumerate() {
            let target = if t < idx.len() { idx[t] } else { EOS };
            if target == PAD {
                continue;
            }
            lv -= step.vd_probs[target].ln();
            ls -= step.sd_probs[target].ln();
            lf -= step.fused_probs[target].ln();
            n += 1;
        }
        let n = n as f64;
        Ok(BranchLosses { ctc, visual: lv / n, semantic: ls / n, fused: lf / n })
    }

    /// Teacher-forced forward pass with caches for [`Model::train_backward`].
    ///
    /// `se_override` substitutes the semantic encoder's input characters
    /// (the default is the CTC coarse prediction). With
    /// `teacher_forcing = false` the decoder consumes its own fused
    /// argmax instead of the gold character; supervision is unchanged.
    pub fn train_forward(
        &self,
        image: &Array2<f64>,
        label: &str,
        se_override: Option<&[usize]>,
        teacher_forcing: bool,
    ) -> Result<TrainStep, NetError> {
        self.check_geometry(image)?;
        let label_idx = charset::encode_label(label).map_err(NetError::BadChar)?;
        if label_idx.is_empty() {
            return Err(NetError::EmptyLabel);
        }
        if label_idx.len() + 1 > self.cfg.t_max {
            return Err(NetError::LabelTooLong { len: label_idx.len(), max: self.cfg.t_max - 1 });
        }

        let (h, ext_cache) = self.params.ext.forward(image);
        let vh = self.params.att.precompute(&h);

        // CTC branch.
        let xs: Vec<Array1<f64>> = h.rows().into_iter().map(|r| r.to_owned()).collect();
        let (ctc_rnn_outs, ctc_rnn_cache) = self.params.ctc_rnn.forward(&xs);
        let t_len = h.nrows();
        let mut ctc_logp = Array2::zeros((t_len, charset::N_CTC));
        let mut ctc_probs = Array2::zeros((t_len, charset::N_CTC));
        for (t, o) in ctc_rnn_outs.iter().enumerate() {
            let logits = self.params.ctc_head.forward(o);
            let lp = log_softmax(&logits);
            ctc_probs.row_mut(t).assign(&lp.mapv(f64::exp));
            ctc_logp.row_mut(t).assign(&lp);
        }
        let (ctc_loss_val, ctc_dlogp) =
            ctc_loss_grad_logp(&ctc_logp, &label_idx, charset::BLANK)?;
        let coarse = ctc_greedy_decode(&ctc_probs);

        // Semantic encoder input: coarse prediction unless overridden.
        let se_chars_raw: Vec<usize> = match se_override {
            Some(chars) => chars.to_vec(),
            None => Self::text_to_indices(&coarse),
        };
        let (s_g, se_chars, se_rnn_cache, se_mean) = self.se_forward(&se_chars_raw);
        let (mut s_s, e_w) = self.sd_init(&s_g);
        let mut s_v = Array1::<f64>::zeros(self.cfg.feat_dim);

        let sup_len = label_idx.len() + 1;
        let mut steps = Vec::with_capacity(sup_len);
        let (mut lv, mut ls, mut lf) = (0.0, 0.0, 0.0);
        let mut y_prev = BOS;
        for t in 0..sup_len {
            let x_sd = concat(&self.params.embed.row(y_prev).to_owned(), &e_w);
            let (s_s_new, sd_gru) = self.params.sd_rnn.step(&x_sd, &s_s);
            let sd_probs = softmax(&self.params.sd_head.forward(&s_s_new));
            let query_core = match self.cfg.query_mode {
                QueryMode::Semantic => &s_s_new,
                QueryMode::PreviousVisual => &s_v,
            };
            let q = concat(query_core, &self.params.step_embed.row(t).to_owned());
            let (alpha, att) = self.params.att.forward(&q, &vh);
            let g = h.t().dot(&alpha);
            let x_vd = if self.cfg.coupled_baseline {
                concat(&self.params.embed.row(y_prev).to_owned(), &g)
            } else {
                g.clone()
            };
            let (s_v_new, vd_gru) = self.params.vd_rnn.step(&x_vd, &s_v);
            let vd_probs = softmax(&self.params.vd_head.forward(&s_v_new));
            let fuse_in = concat(&s_v_new, &s_s_new);
            let fused_probs = softmax(&self.params.fuse.forward(&fuse_in));

            let target = if t < label_idx.len() { label_idx[t] } else { EOS };
            lv -= vd_probs[target].ln();
            ls -= sd_probs[target].ln();
            lf -= fused_probs[target].ln();

            let emitted = argmax(fused_probs.as_slice().unwrap());
            steps.push(StepTape {
                y_prev,
                sd_gru,
                s_s: s_s_new.clone(),
                sd_probs,
                att,
                vd_gru,
                s_v: s_v_new.clone(),
                vd_probs,
                fuse_in,
                fused_probs,
                target,
            });
            s_s = s_s_new;
            s_v = s_v_new;
            y_prev = if teacher_forcing { target } else { emitted };
        }

        let n = sup_len as f64;
        let losses = BranchLosses {
            ctc: ctc_loss_val,
            visual: lv / n,
            semantic: ls / n,
            fused: lf / n,
        };
        if let Some(branch) = losses.non_finite_branch() {
            return Err(NetError::NonFinite { branch });
        }

        Ok(TrainStep {
            losses,
            coarse,
            label_idx,
            ext_cache,
            h,
            vh,
            ctc_rnn_cache,
            ctc_rnn_outs,
            ctc_probs,
            ctc_dlogp,
            se_chars,
            se_rnn_cache,
            se_mean,
            s_g,
            steps,
        })
    }

    /// Accumulate gradients of the weighted total loss into `grads`.
    pub fn train_backward(&self, step: &TrainStep, weights: &LossWeights, grads: &mut Params) {
        let cfg = &self.cfg;
        let t_feat = step.h.nrows();
        let sup_len = step.steps.len();
        let inv_n = 1.0 / sup_len as f64;

        let mut dh = Array2::<f64>::zeros(step.h.dim());
        let mut dvh = Array2::<f64>::zeros(step.vh.dim());
        let mut d_sg = Array1::<f64>::zeros(cfg.sem_dim);
        let mut d_ew = Array1::<f64>::zeros(cfg.sem_dim);
        let mut d_ss_next = Array1::<f64>::zeros(cfg.sem_dim);
        let mut d_sv_next = Array1::<f64>::zeros(cfg.feat_dim);

        for t in (0..sup_len).rev() {
            let tape = &step.steps[t];

            // Fused head.
            let mut d_flogits = tape.fused_probs.clone();
            d_flogits[tape.target] -= 1.0;
            d_flogits *= weights.fused * inv_n;
            let mut d_fuse_in = Array1::<f64>::zeros(cfg.feat_dim + cfg.sem_dim);
            self.params.fuse.backward(&tape.fuse_in, &d_flogits, &mut grads.fuse, &mut d_fuse_in);
            let mut d_sv = d_sv_next.clone() + d_fuse_in.slice(ndarray::s![..cfg.feat_dim]);
            let mut d_ss = d_ss_next.clone() + d_fuse_in.slice(ndarray::s![cfg.feat_dim..]);

            // Visual head.
            let mut d_vlogits = tape.vd_probs.clone();
            d_vlogits[tape.target] -= 1.0;
            d_vlogits *= weights.visual * inv_n;
            self.params.vd_head.backward(&tape.s_v, &d_vlogits, &mut grads.vd_head, &mut d_sv);

            // Visual recurrence.
            let (d_xvd, mut d_sv_prev) =
                self.params.vd_rnn.backward_step(&tape.vd_gru, &d_sv, &mut grads.vd_rnn);
            let d_g = if cfg.coupled_baseline {
                let d_emb = d_xvd.slice(ndarray::s![..cfg.embed_dim]).to_owned();
                add_embed_grad(&mut grads.embed, tape.y_prev, &d_emb);
                d_xvd.slice(ndarray::s![cfg.embed_dim..]).to_owned()
            } else {
                d_xvd
            };

            // Glimpse g = h' alpha.
            let d_alpha = step.h.dot(&d_g);
            outer_acc(&mut dh, &tape.att.alpha, &d_g);

            // Attention.
            let d_q = self.params.att.backward(&tape.att, &d_alpha, &mut grads.att, &mut dvh);
            let qc = cfg.query_core_dim();
            let d_qcore = d_q.slice(ndarray::s![..qc]).to_owned();
            let d_step_emb = d_q.slice(ndarray::s![qc..]).to_owned();
            grads.step_embed.row_mut(t).scaled_add(1.0, &d_step_emb);
            match cfg.query_mode {
                QueryMode::Semantic => d_ss += &d_qcore,
                QueryMode::PreviousVisual => d_sv_prev += &d_qcore,
            }

            // Semantic head.
            let mut d_slogits = tape.sd_probs.clone();
            d_slogits[tape.target] -= 1.0;
            d_slogits *= weights.semantic * inv_n;
            self.params.sd_head.backward(&tape.s_s, &d_slogits, &mut grads.sd_head, &mut d_ss);

            // Semantic recurrence.
            let (d_xsd, d_ss_prev) =
                self.params.sd_rnn.backward_step(&tape.sd_gru, &d_ss, &mut grads.sd_rnn);
            let d_emb = d_xsd.slice(ndarray::s![..cfg.embed_dim]).to_owned();
            add_embed_grad(&mut grads.embed, tape.y_prev, &d_emb);
            d_ew += &d_xsd.slice(ndarray::s![cfg.embed_dim..]);

            d_ss_next = d_ss_prev;
            d_sv_next = d_sv_prev;
        }

        // Semantic decoder initialization; the initial visual state is a
        // constant zero vector, so its gradient stops here.
        self.params.sd_init_state.backward(
            &step.s_g,
            &d_ss_next,
            &mut grads.sd_init_state,
            &mut d_sg,
        );
        self.params.sd_init_word.backward(&step.s_g, &d_ew, &mut grads.sd_init_word, &mut d_sg);

        // Semantic encoder: s_g = proj(mean of rnn outputs).
        let mut d_mean = Array1::<f64>::zeros(2 * cfg.sem_dim);
        self.params.se_proj.backward(&step.se_mean, &d_sg, &mut grads.se_proj, &mut d_mean);
        let t_se = step.se_chars.len();
        let d_each = d_mean.mapv(|v| v / t_se as f64);
        let douts: Vec<Array1<f64>> = vec![d_each; t_se];
        let dxs = self.params.se_rnn.backward(&step.se_rnn_cache, &douts, &mut grads.se_rnn);
        for (c, dx) in step.se_chars.iter().zip(&dxs) {
            add_embed_grad(&mut grads.embed, *c, dx);
        }

        // CTC branch: chain the loss gradient through log-softmax, the
        // classifier and the recurrent layer back into the features.
        let mut ctc_douts = Vec::with_capacity(t_feat);
        for t in 0..t_feat {
            let row_sum: f64 = step.ctc_dlogp.row(t).sum();
            let mut d_logits = Array1::<f64>::zeros(charset::N_CTC);
            for k in 0..charset::N_CTC {
                d_logits[k] =
                    weights.ctc * (step.ctc_dlogp[(t, k)] - step.ctc_probs[(t, k)] * row_sum);
            }
            let mut d_out = Array1::<f64>::zeros(2 * cfg.ctc_hidden);
            self.params.ctc_head.backward(
                &step.ctc_rnn_outs[t],
                &d_logits,
                &mut grads.ctc_head,
                &mut d_out,
            );
            ctc_douts.push(d_out);
        }
        let d_ctc_xs =
            self.params.ctc_rnn.backward(&step.ctc_rnn_cache, &ctc_douts, &mut grads.ctc_rnn);
        for (t, dx) in d_ctc_xs.iter().enumerate() {
            dh.row_mut(t).scaled_add(1.0, dx);
        }

        // Attention's feature-path gradient, then the extractor.
        self.params.att.backward_features(&step.h, &dvh, &mut grads.att, &mut dh);
        self.params.ext.backward(&step.ext_cache, &dh, &mut grads.ext);
    }
}

fn concat(a: &Array1<f64>, b: &Array1<f64>) -> Array1<f64> {
    let mut out = Array1::<f64>::zeros(a.len() + b.len());
    out.slice_mut(ndarray::s![..a.len()]).assign(a);
    out.slice_mut(ndarray::s![a.len()..]).assign(b);
    out
}

fn add_embed_grad(table: &mut Array2<f64>, row: usize, d: &Array1<f64>) {
    table.row_mut(row).scaled_add(1.0, d);
}


/// Tape for one semantic-decoder step during pre-training.
struct SemStepTape {
    y_prev: usize,
    sd_gru: GruStepCache,
    s_s: Array1<f64>,
    sd_probs: Array1<f64>,
    target: usize,
}

/// Forward caches for one correction pair (semantic module only).
pub struct SemTrainStep {
    pub loss: f64,
    se_chars: Vec<usize>,
    se_rnn_cache: super::gru::BiGruCache,
    se_mean: Array1<f64>,
    s_g: Array1<f64>,
    steps: Vec<SemStepTape>,
}

impl Model {
    /// Teacher-forced correction forward: encode the corrupted string,
    /// decode the target word through the semantic decoder alone. The
    /// loss is the mean cross-entropy of the semantic head.
    pub fn sem_train_forward(
        &self,
        corrupted: &str,
        target: &str,
    ) -> Result<SemTrainStep, NetError> {
        let target_idx = charset::encode_label(target).map_err(NetError::BadChar)?;
        if target_idx.is_empty() {
            return Err(NetError::EmptyLabel);
        }
        if target_idx.len() + 1 > self.cfg.t_max {
            return Err(NetError::LabelTooLong {
                len: target_idx.len(),
                max: self.cfg.t_max - 1,
            });
        }
        let in_chars = Self::text_to_indices(corrupted);
        let (s_g, se_chars, se_rnn_cache, se_mean) = self.se_forward(&in_chars);
        let (mut s_s, e_w) = self.sd_init(&s_g);

        let sup_len = target_idx.len() + 1;
        let mut steps = Vec::with_capacity(sup_len);
        let mut loss = 0.0;
        let mut y_prev = BOS;
        for t in 0..sup_len {
            let x_sd = concat(&self.params.embed.row(y_prev).to_owned(), &e_w);
            let (s_s_new, sd_gru) = self.params.sd_rnn.step(&x_sd, &s_s);
            let sd_probs = softmax(&self.params.sd_head.forward(&s_s_new));
            let tgt = if t < target_idx.len() { target_idx[t] } else { EOS };
            loss -= sd_probs[tgt].ln();
            steps.push(SemStepTape {
                y_prev,
                sd_gru,
                s_s: s_s_new.clone(),
                sd_probs,
                target: tgt,
            });
            s_s = s_s_new;
            y_prev = tgt;
        }
        loss /= sup_len as f64;
        if !loss.is_finite() {
            return Err(NetError::NonFinite { branch: "semantic" });
        }
        Ok(SemTrainStep { loss, se_chars, se_rnn_cache, se_mean, s_g, steps })
    }

    /// Backward for [`Model::sem_train_forward`]; touches only the
    /// semantic module's parameter groups.
    pub fn sem_train_backward(&self, step: &SemTrainStep, grads: &mut Params) {
        let cfg = &self.cfg;
        let inv_n = 1.0 / step.steps.len() as f64;
        let mut d_ss_next = Array1::<f64>::zeros(cfg.sem_dim);
        let mut d_ew = Array1::<f64>::zeros(cfg.sem_dim);
        for tape in step.steps.iter().rev() {
            let mut d_logits = tape.sd_probs.clone();
            d_logits[tape.target] -= 1.0;
            d_logits *= inv_n;
            let mut d_ss = d_ss_next.clone();
            self.params.sd_head.backward(&tape.s_s, &d_logits, &mut grads.sd_head, &mut d_ss);
            let (d_xsd, d_ss_prev) =
                self.params.sd_rnn.backward_step(&tape.sd_gru, &d_ss, &mut grads.sd_rnn);
            add_embed_grad(
                &mut grads.embed,
                tape.y_prev,
                &d_xsd.slice(ndarray::s![..cfg.embed_dim]).to_owned(),
            );
            d_ew += &d_xsd.slice(ndarray::s![cfg.embed_dim..]);
            d_ss_next = d_ss_prev;
        }
        let mut d_sg = Array1::<f64>::zeros(cfg.sem_dim);
        self.params.sd_init_state.backward(
            &step.s_g,
            &d_ss_next,
            &mut grads.sd_init_state,
            &mut d_sg,
        );
        self.params.sd_init_word.backward(&step.s_g, &d_ew, &mut grads.sd_init_word, &mut d_sg);
        let mut d_mean = Array1::<f64>::zeros(2 * cfg.sem_dim);
        self.params.se_proj.backward(&step.se_mean, &d_sg, &mut grads.se_proj, &mut d_mean);
        let t_se = step.se_chars.len();
        let d_each = d_mean.mapv(|v| v / t_se as f64);
        let douts: Vec<Array1<f64>> = vec![d_each; t_se];
        let dxs = self.params.se_rnn.backward(&step.se_rnn_cache, &douts, &mut grads.se_rnn);
        for (c, dx) in step.se_chars.iter().zip(&dxs) {
            add_embed_grad(&mut grads.embed, *c, dx);
        }
    }
}

#[cfg(test)]
mod golden_tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Frozen forward values for the tiny configuration at seed 2024.
    /// Guards the numeric path against unintended changes; regenerate
    /// only on a deliberate change to initialization or the forward.
    #[test]
    fn fixed_seed_forward_matches_frozen_values() {
        let cfg = ModelConfig::tiny();
        let model = Model::new(cfg.clone(), 2024).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img =
            Array2::from_shape_fn((cfg.img_h, cfg.img_w), |_| rng.random_range(0.0..1.0));
        let h = model.extract_features(&img).unwrap();
        let p = model.ctc_probs(&h);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(h[(0, 0)], -0.5348960188410381));
        assert!(close(h[(3, 7)], 0.4609740678557311));
        assert!(close(p[(0, 0)], 0.028810034579997434));
        assert!(close(p[(1, 36)], 0.02482993547820975));
        assert!(close(p[(3, 17)], 0.031034193428394065));
        let s_g = model.semantic_encode("ab1");
        assert!(close(s_g[0], 0.10171669748895282));
        assert!(close(s_g[5], 0.1479261888597132));
    }
}
