//! Beam search over the semantic decoder for top-k word correction.

use ndarray::Array1;

use crate::charset::{self, BOS, EOS};
use crate::netcore::Model;

/// A completed hypothesis: the decoded word and its length-normalized
/// log probability.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub text: String,
    pub score: f64,
}

struct Live {
    state: Array1<f64>,
    chars: Vec<usize>,
    logp: f64,
    y_prev: usize,
}

/// Decode the semantic module alone, seeded by an input string (the CTC
/// coarse prediction at evaluation time). Beams expand over characters
/// plus EoS, terminate at EoS and are ranked by log probability per
/// emitted symbol. Returns hypotheses best-first.
pub fn sd_beam_search(model: &Model, seed_text: &str, width: usize, max_len: usize) -> Vec<Hypothesis> {
    let width = width.max(1);
    let s_g = model.semantic_encode(seed_text);
    let (s0, e_w) = model.sd_init(&s_g);
    let mut live = vec![Live { state: s0, chars: Vec::new(), logp: 0.0, y_prev: BOS }];
    let mut done: Vec<Hypothesis> = Vec::new();

    for _step in 0..max_len {
        let mut candidates: Vec<(usize, usize, f64)> = Vec::new(); // (beam, symbol, logp)
        let mut next_states = Vec::with_capacity(live.len());
        for (bi, beam) in live.iter().enumerate() {
            let s = model
                .sd_step(&beam.state, beam.y_prev, &e_w)
                .expect("beam symbols are always valid");
            let probs = model.sd_classify(&s);
            for sym in (0..charset::N_VIS).chain([EOS]) {
                candidates.push((bi, sym, beam.logp + probs[sym].ln()));
            }
            next_states.push(s);
        }
        candidates.sort_by(|a, b| b.2.total_cmp(&a.2));
        let mut next_live = Vec::with_capacity(width);
        for &(bi, sym, logp) in candidates.iter() {
            if next_live.len() >= width {
                break;
            }
            let parent = &live[bi];
            if sym == EOS {
                let len = parent.chars.len() + 1;
                done.push(Hypothesis {
                    text: charset::decode_label(&parent.chars),
                    score: logp / len as f64,
                });
            } else {
                let mut chars = parent.chars.clone();
                chars.push(sym);
                next_live.push(Live {
                    state: next_states[bi].clone(),
                    chars,
                    logp,
                    y_prev: sym,
                });
            }
        }
        live = next_live;
        if live.is_empty() {
            break;
        }
    }
    // Whatever is still live at the cap completes without EoS credit.
    for beam in live {
        let len = beam.chars.len().max(1);
        done.push(Hypothesis {
            text: charset::decode_label(&beam.chars),
            score: beam.logp / len as f64,
        });
    }
    done.sort_by(|a, b| b.score.total_cmp(&a.score));
    // Distinct paths can complete with the same text; keep the best.
    let mut seen = std::collections::HashSet::new();
    done.retain(|h| seen.insert(h.text.clone()));
    done.truncate(width);
    done
}

/// Top-k correction accuracies of the semantic module over
/// (corrupted, target) pairs. Returns one accuracy per requested k.
pub fn correction_topk(
    model: &Model,
    pairs: &[(String, String)],
    ks: &[usize],
) -> Vec<f64> {
    let width = ks.iter().copied().max().unwrap_or(1).max(5);
    let mut hits = vec![0usize; ks.len()];
    for (corrupted, target) in pairs {
        let hyps = sd_beam_search(model, corrupted, width, model.cfg.t_max);
        let rank = hyps.iter().position(|h| &h.text == target);
        for (ki, &k) in ks.iter().enumerate() {
            if matches!(rank, Some(r) if r < k) {
                hits[ki] += 1;
            }
        }
    }
    hits.iter().map(|&h| h as f64 / pairs.len() as f64).collect()
}
