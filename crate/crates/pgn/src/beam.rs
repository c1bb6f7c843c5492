//! Length-normalized beam search over any step-wise scorer.

use std::cmp::Ordering;

use headline_core::tokenize::Vocab;

use crate::cell::CellState;
use crate::config::PgnConfig;
use crate::model::{decode_step, encode, final_distribution, Encoded, Example};
use crate::params::PgnParams;

/// A left-to-right model: feed one token, get log-probabilities over the next.
pub trait StepModel {
    type State: Clone;

    fn initial(&self) -> Self::State;

    /// Consumes `token` from `state`; returns the new state and next-token log-probabilities.
    fn step(&self, state: &Self::State, token: u32) -> (Self::State, Vec<f64>);
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub beam_size: usize,
    pub max_len: usize,
    /// Length-penalty exponent α in `logP / len^α`.
    pub alpha: f64,
    pub bos: u32,
    pub eos: u32,
    /// Also decode greedily and keep whichever result scores higher.
    pub include_greedy: bool,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_size: 4,
            max_len: 16,
            alpha: 1.0,
            bos: Vocab::BOS_ID,
            eos: Vocab::EOS_ID,
            include_greedy: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated ids, ending with EOS when `finished`.
    pub tokens: Vec<u32>,
    pub log_prob: f64,
    pub finished: bool,
}

impl Hypothesis {
    pub fn score(&self, alpha: f64) -> f64 {
        if self.tokens.is_empty() {
            return f64::NEG_INFINITY;
        }
        self.log_prob / (self.tokens.len() as f64).powf(alpha)
    }

    /// Generated ids without the trailing EOS.
    pub fn content(&self) -> &[u32] {
        if self.finished {
            &self.tokens[..self.tokens.len() - 1]
        } else {
            &self.tokens
        }
    }
}

/// Higher score first; equal scores fall back to the smaller token sequence.
fn rank(a: &Hypothesis, b: &Hypothesis, alpha: f64) -> Ordering {
    b.score(alpha)
        .total_cmp(&a.score(alpha))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

fn best_of(mut pool: Vec<Hypothesis>, alpha: f64) -> Option<Hypothesis> {
    pool.sort_by(|a, b| rank(a, b, alpha));
    pool.into_iter().next()
}

/// Greedy decoding; the lowest id wins an argmax tie.
pub fn greedy<M: StepModel>(model: &M, cfg: &BeamConfig) -> Hypothesis {
    let mut state = model.initial();
    let mut token = cfg.bos;
    let mut hyp = Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
        finished: false,
    };
    for _ in 0..cfg.max_len {
        let (next, logp) = model.step(&state, token);
        let mut best = 0;
        for (i, &lp) in logp.iter().enumerate() {
            if lp > logp[best] {
                best = i;
            }
        }
        token = best as u32;
        hyp.tokens.push(token);
        hyp.log_prob += logp[best];
        state = next;
        if token == cfg.eos {
            hyp.finished = true;
            break;
        }
    }
    hyp
}

struct Live<S> {
    hyp: Hypothesis,
    state: S,
}

/// Beam search scored by `logP / len^α`.
///
/// Each round expands every live hypothesis by every token and walks the
/// candidates by log-probability (ties by token sequence). EOS candidates met
/// before the beam fills become finished; the rest fill the beam. Search stops
/// once `beam_size` hypotheses finished or `max_len` is reached, and returns
/// the best finished hypothesis, or the best partial one when none finished.
pub fn beam_search<M: StepModel>(model: &M, cfg: &BeamConfig) -> Hypothesis {
    let k = cfg.beam_size.max(1);
    let mut live = vec![Live {
        hyp: Hypothesis {
            tokens: Vec::new(),
            log_prob: 0.0,
            finished: false,
        },
        state: model.initial(),
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for _ in 0..cfg.max_len {
        let mut candidates: Vec<(usize, u32, f64)> = Vec::new();
        let mut next_states = Vec::with_capacity(live.len());
        for (li, l) in live.iter().enumerate() {
            let last = l.hyp.tokens.last().copied().unwrap_or(cfg.bos);
            let (state, logp) = model.step(&l.state, last);
            next_states.push(state);
            for (tok, &lp) in logp.iter().enumerate() {
                candidates.push((li, tok as u32, l.hyp.log_prob + lp));
            }
        }
        candidates.sort_by(|a, b| {
            b.2.total_cmp(&a.2).then_with(|| {
                let ta = live[a.0].hyp.tokens.iter().chain(std::iter::once(&a.1));
                let tb = live[b.0].hyp.tokens.iter().chain(std::iter::once(&b.1));
                ta.cmp(tb)
            })
        });

        let mut next_live = Vec::with_capacity(k);
        for (li, tok, lp) in candidates {
            if next_live.len() == k {
                break;
            }
            let mut tokens = live[li].hyp.tokens.clone();
            tokens.push(tok);
            if tok == cfg.eos {
                finished.push(Hypothesis {
                    tokens,
                    log_prob: lp,
                    finished: true,
                });
            } else {
                next_live.push(Live {
                    hyp: Hypothesis {
                        tokens,
                        log_prob: lp,
                        finished: false,
                    },
                    state: next_states[li].clone(),
                });
            }
        }
        live = next_live;
        if finished.len() >= k || live.is_empty() {
            break;
        }
    }

    let beam = match best_of(finished, cfg.alpha) {
        Some(h) => h,
        None => best_of(live.into_iter().map(|l| l.hyp).collect(), cfg.alpha)
            .expect("beam never empties without a finished hypothesis"),
    };
    if !cfg.include_greedy {
        return beam;
    }
    let g = greedy(model, cfg);
    // finished beats partial; then score
    let key = |h: &Hypothesis| (h.finished, h.score(cfg.alpha));
    let (bk, gk) = (key(&beam), key(&g));
    if gk.0 && !bk.0 || (gk.0 == bk.0 && gk.1 > bk.1) {
        g
    } else {
        beam
    }
}

/// The pointer-generator as a [`StepModel`] over the extended vocabulary of one source.
pub struct PgnDecoder<'a> {
    params: &'a PgnParams,
    cfg: &'a PgnConfig,
    enc: Encoded,
    src_ext: Vec<u32>,
    n_oov: usize,
}

#[derive(Debug, Clone)]
pub struct DecoderState {
    pub cell: CellState,
    pub coverage: Vec<f64>,
}

impl<'a> PgnDecoder<'a> {
    pub fn new(params: &'a PgnParams, cfg: &'a PgnConfig, example: &Example) -> Self {
        PgnDecoder {
            params,
            cfg,
            enc: encode(params, cfg, &example.src),
            src_ext: example.src_ext.clone(),
            n_oov: example.n_oov,
        }
    }
}

impl StepModel for PgnDecoder<'_> {
    type State = DecoderState;

    fn initial(&self) -> DecoderState {
        DecoderState {
            cell: self.enc.init.clone(),
            coverage: vec![0.0; self.src_ext.len()],
        }
    }

    fn step(&self, state: &DecoderState, token: u32) -> (DecoderState, Vec<f64>) {
        let out = decode_step(self.params, self.cfg, &self.enc, &state.cell, &state.coverage, token);
        let dist = final_distribution(out.p_gen, &out.vocab_dist, &out.attention, &self.src_ext, self.n_oov);
        let coverage = if self.cfg.use_coverage {
            state.coverage.iter().zip(&out.attention).map(|(c, a)| c + a).collect()
        } else {
            state.coverage.clone()
        };
        let logp = dist.iter().map(|p| p.ln()).collect();
        (
            DecoderState {
                cell: out.state,
                coverage,
            },
            logp,
        )
    }
}

/// Decodes one source into extended-space ids (EOS stripped).
pub fn decode_example(params: &PgnParams, cfg: &PgnConfig, example: &Example, beam: &BeamConfig) -> Vec<u32> {
    let model = PgnDecoder::new(params, cfg, example);
    let hyp = if beam.beam_size <= 1 {
        greedy(&model, beam)
    } else {
        beam_search(&model, beam)
    };
    hyp.content().to_vec()
}
