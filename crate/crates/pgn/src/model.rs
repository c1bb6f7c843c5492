//! Forward pass, loss and backpropagation of the pointer-generator.
//!
//! Per decoder step t with state s_t and coverage c_t:
//!
//! ```text
//! e_i   = vᵀ tanh(W_h h_i + W_s s_t + w_c c_t[i] + b_attn)
//! a_t   = softmax(e)
//! h*_t  = Σ_i a_t[i] h_i
//! P_voc = softmax(V' (V [s_t; h*_t] + b) + b')
//! p_gen = σ(w_h·h*_t + w_s·s_t + w_x·x_t + b_ptr)
//! P(w)  = p_gen P_voc(w) + (1 − p_gen) Σ_{i: src_i = w} a_t[i]
//! loss  = mean_t [ −ln P(y_t) + λ Σ_i min(a_t[i], c_t[i]) ],   c_{t+1} = c_t + a_t
//! ```

use headline_core::tokenize::Vocab;

use crate::cell::{self, CellCache, CellState};
use crate::config::{CellKind, PgnConfig};
use crate::error::{PgnError, Result};
use crate::params::PgnParams;
use crate::tensor::{axpy, dot, sigmoid, softmax, softmax_backward};

/// One training pair in id space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    /// Source ids for embedding lookup (OOV mapped to UNK).
    pub src: Vec<u32>,
    /// Source ids in the extended space (OOV words get ids ≥ vocab_size).
    pub src_ext: Vec<u32>,
    /// Target ids in the extended space, ending with EOS.
    pub tgt: Vec<u32>,
    /// Number of per-example extended ids.
    pub n_oov: usize,
}

impl Example {
    /// An example with no out-of-vocabulary words.
    pub fn closed(src: Vec<u32>, tgt: Vec<u32>) -> Self {
        Example {
            src_ext: src.clone(),
            src,
            tgt,
            n_oov: 0,
        }
    }

    /// Decoder inputs under teacher forcing: BOS then the target shifted right,
    /// with extended ids folded back to UNK.
    pub fn decoder_inputs(&self, vocab_size: usize) -> Vec<u32> {
        std::iter::once(Vocab::BOS_ID)
            .chain(self.tgt[..self.tgt.len().saturating_sub(1)].iter().copied())
            .map(|id| fold_oov(id, vocab_size))
            .collect()
    }
}

pub fn fold_oov(id: u32, vocab_size: usize) -> u32 {
    if (id as usize) < vocab_size {
        id
    } else {
        Vocab::UNK_ID
    }
}

/// Encoder outputs: concatenated bidirectional states and their attention features.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub states: Vec<Vec<f64>>,
    pub features: Vec<Vec<f64>>,
    pub init: CellState,
}

struct EncoderCache {
    fwd: Vec<CellCache>,
    bwd: Vec<CellCache>,
    reduce_h_in: Vec<f64>,
    reduce_c_in: Vec<f64>,
}

/// Everything one decoder step produces.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: CellState,
    pub attention: Vec<f64>,
    pub context: Vec<f64>,
    pub vocab_dist: Vec<f64>,
    pub p_gen: f64,
    cell: CellCache,
    x: Vec<f64>,
    tanh_u: Vec<Vec<f64>>,
    concat: Vec<f64>,
    hidden_out: Vec<f64>,
}

/// Per-step values kept for inspection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub p_gen: Vec<f64>,
    pub attention: Vec<Vec<f64>>,
    pub coverage_loss: Vec<f64>,
    pub nll: Vec<f64>,
    /// Argmax of the final distribution at each step.
    pub predictions: Vec<u32>,
}

impl Diagnostics {
    pub fn correct(&self, tgt: &[u32]) -> usize {
        self.predictions.iter().zip(tgt).filter(|(p, t)| p == t).count()
    }
}

fn embed(params: &PgnParams, id: u32) -> Vec<f64> {
    params.embedding.row(id as usize).to_vec()
}

fn check_example(cfg: &PgnConfig, ex: &Example) -> Result<()> {
    if ex.src.is_empty() {
        return Err(PgnError::EmptySource);
    }
    if ex.src.len() > cfg.max_src_len {
        return Err(PgnError::SourceTooLong {
            len: ex.src.len(),
            max: cfg.max_src_len,
        });
    }
    let limit = cfg.vocab_size + ex.n_oov;
    if let Some(&bad) = ex.tgt.iter().find(|&&t| t as usize >= limit) {
        return Err(PgnError::TargetOutOfRange {
            id: bad,
            vocab: cfg.vocab_size,
            extended: ex.n_oov,
        });
    }
    Ok(())
}

fn encode_cached(params: &PgnParams, cfg: &PgnConfig, src: &[u32]) -> (Encoded, EncoderCache) {
    let hd = cfg.hidden_dim;
    let n = src.len();
    let xs: Vec<Vec<f64>> = src.iter().map(|&id| embed(params, id)).collect();

    let mut fwd = Vec::with_capacity(n);
    let mut fwd_h = Vec::with_capacity(n);
    let mut state = CellState::zeros(cfg.cell, hd);
    for x in &xs {
        let (next, cache) = cell::forward(cfg.cell, &params.enc_fwd_w, &params.enc_fwd_b, x, &state);
        fwd.push(cache);
        fwd_h.push(next.h.clone());
        state = next;
    }
    let fwd_last = state;

    let mut bwd = vec![None; n];
    let mut bwd_h = vec![Vec::new(); n];
    let mut state = CellState::zeros(cfg.cell, hd);
    for i in (0..n).rev() {
        let (next, cache) =
            cell::forward(cfg.cell, &params.enc_bwd_w, &params.enc_bwd_b, &xs[i], &state);
        bwd[i] = Some(cache);
        bwd_h[i] = next.h.clone();
        state = next;
    }
    let bwd_first = state;
    let bwd: Vec<CellCache> = bwd.into_iter().map(Option::unwrap).collect();

    let states: Vec<Vec<f64>> = (0..n)
        .map(|i| fwd_h[i].iter().chain(&bwd_h[i]).copied().collect())
        .collect();
    let features: Vec<Vec<f64>> = states
        .iter()
        .map(|h| {
            let mut f = vec![0.0; hd];
            params.attn_wh.matvec(h, &mut f);
            f
        })
        .collect();

    let reduce_h_in: Vec<f64> = fwd_last.h.iter().chain(&bwd_first.h).copied().collect();
    let mut h0 = vec![0.0; hd];
    params.reduce_h_w.matvec(&reduce_h_in, &mut h0);
    for (v, b) in h0.iter_mut().zip(&params.reduce_h_b.data) {
        *v = (*v + b).tanh();
    }
    let (reduce_c_in, c0) = match cfg.cell {
        CellKind::Lstm => {
            let input: Vec<f64> = fwd_last.c.iter().chain(&bwd_first.c).copied().collect();
            let mut c0 = vec![0.0; hd];
            params.reduce_c_w.matvec(&input, &mut c0);
            for (v, b) in c0.iter_mut().zip(&params.reduce_c_b.data) {
                *v = (*v + b).tanh();
            }
            (input, c0)
        }
        CellKind::Gru => (Vec::new(), Vec::new()),
    };

    (
        Encoded {
            states,
            features,
            init: CellState { h: h0, c: c0 },
        },
        EncoderCache {
            fwd,
            bwd,
            reduce_h_in,
            reduce_c_in,
        },
    )
}

/// Runs the bidirectional encoder and the reduce layer.
pub fn encode(params: &PgnParams, cfg: &PgnConfig, src: &[u32]) -> Encoded {
    encode_cached(params, cfg, src).0
}

/// Attention over encoder states given precomputed `W_h h_i` features.
/// Returns weights, context and the per-position tanh activations.
fn attend(
    params: &PgnParams,
    features: &[Vec<f64>],
    states: &[Vec<f64>],
    s: &[f64],
    coverage: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let hd = s.len();
    let mut ws = vec![0.0; params.attn_ws.rows];
    params.attn_ws.matvec(s, &mut ws);
    let wc = &params.attn_wc.data;
    let b = &params.attn_b.data;
    let v = &params.attn_v.data;
    let mut scores = Vec::with_capacity(features.len());
    let mut tanh_u = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let u: Vec<f64> = (0..hd)
            .map(|k| (f[k] + ws[k] + wc[k] * coverage[i] + b[k]).tanh())
            .collect();
        scores.push(dot(v, &u));
        tanh_u.push(u);
    }
    let attn = softmax(&scores);
    let mut ctx = vec![0.0; states[0].len()];
    for (a, h) in attn.iter().zip(states) {
        axpy(*a, h, &mut ctx);
    }
    (attn, ctx, tanh_u)
}

/// Attention weights and context vector for decoder state `dec_state` over
/// `enc_states`, with the current coverage vector.
pub fn attention(
    params: &PgnParams,
    dec_state: &[f64],
    enc_states: &[Vec<f64>],
    coverage: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let features: Vec<Vec<f64>> = enc_states
        .iter()
        .map(|h| {
            let mut f = vec![0.0; params.attn_wh.rows];
            params.attn_wh.matvec(h, &mut f);
            f
        })
        .collect();
    let (a, ctx, _) = attend(params, &features, enc_states, dec_state, coverage);
    (a, ctx)
}

/// Mixes the generation distribution with copy mass scattered onto source ids.
/// The result has `vocab_dist.len() + extended_size` entries.
pub fn final_distribution(
    p_gen: f64,
    vocab_dist: &[f64],
    attention: &[f64],
    src_ext: &[u32],
    extended_size: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(vocab_dist.len() + extended_size);
    out.extend(vocab_dist.iter().map(|p| p_gen * p));
    out.resize(vocab_dist.len() + extended_size, 0.0);
    for (&a, &id) in attention.iter().zip(src_ext) {
        out[id as usize] += (1.0 - p_gen) * a;
    }
    out
}

/// `(c + a, Σ min(a_i, c_i))`.
pub fn coverage_step(coverage: &[f64], attention: &[f64]) -> (Vec<f64>, f64) {
    let loss = coverage.iter().zip(attention).map(|(c, a)| c.min(*a)).sum();
    let next = coverage.iter().zip(attention).map(|(c, a)| c + a).collect();
    (next, loss)
}

/// One decoder step: consume `input_id` from `state`, attend, and produce the
/// generation distribution and copy gate.
pub fn decode_step(
    params: &PgnParams,
    cfg: &PgnConfig,
    enc: &Encoded,
    state: &CellState,
    coverage: &[f64],
    input_id: u32,
) -> StepOutput {
    let hd = cfg.hidden_dim;
    let x = embed(params, fold_oov(input_id, cfg.vocab_size));
    let (next, cell_cache) = cell::forward(cfg.cell, &params.dec_w, &params.dec_b, &x, state);
    let s = &next.h;
    let (attn, ctx, tanh_u) = attend(params, &enc.features, &enc.states, s, coverage);

    let concat: Vec<f64> = s.iter().chain(&ctx).copied().collect();
    let mut hidden_out = vec![0.0; hd];
    params.out_w1.matvec(&concat, &mut hidden_out);
    hidden_out.add_assign_slice(&params.out_b1.data);
    let mut logits = vec![0.0; cfg.vocab_size];
    params.out_w2.matvec(&hidden_out, &mut logits);
    logits.add_assign_slice(&params.out_b2.data);
    let vocab_dist = softmax(&logits);

    let p_gen = sigmoid(
        dot(&params.ptr_wh.data, &ctx)
            + dot(&params.ptr_ws.data, s)
            + dot(&params.ptr_wx.data, &x)
            + params.ptr_b.data[0],
    );
    StepOutput {
        state: next,
        attention: attn,
        context: ctx,
        vocab_dist,
        p_gen,
        cell: cell_cache,
        x,
        tanh_u,
        concat,
        hidden_out,
    }
}

trait AddAssignSlice {
    fn add_assign_slice(&mut self, other: &[f64]);
}

impl AddAssignSlice for Vec<f64> {
    fn add_assign_slice(&mut self, other: &[f64]) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
    }
}

fn argmax(values: &[f64]) -> u32 {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best as u32
}

struct Forward {
    loss: f64,
    diag: Diagnostics,
    enc: Encoded,
    enc_cache: EncoderCache,
    steps: Vec<StepOutput>,
    coverages: Vec<Vec<f64>>,
    inputs: Vec<u32>,
}

fn run_forward(params: &PgnParams, cfg: &PgnConfig, ex: &Example) -> Result<Forward> {
    check_example(cfg, ex)?;
    let (enc, enc_cache) = encode_cached(params, cfg, &ex.src);
    let n = ex.src.len();
    let inputs = ex.decoder_inputs(cfg.vocab_size);
    let steps_total = ex.tgt.len() as f64;
    let mut coverage = vec![0.0; n];
    let mut state = enc.init.clone();
    let mut diag = Diagnostics::default();
    let mut steps = Vec::with_capacity(ex.tgt.len());
    let mut coverages = Vec::with_capacity(ex.tgt.len());
    let mut loss = 0.0;
    for (&input, &target) in inputs.iter().zip(&ex.tgt) {
        let attn_cov = if cfg.use_coverage {
            coverage.clone()
        } else {
            vec![0.0; n]
        };
        let out = decode_step(params, cfg, &enc, &state, &attn_cov, input);
        let dist = final_distribution(out.p_gen, &out.vocab_dist, &out.attention, &ex.src_ext, ex.n_oov);
        let nll = -dist[target as usize].ln();
        let (next_cov, cov_loss) = coverage_step(&attn_cov, &out.attention);
        let weighted = if cfg.use_coverage {
            cfg.coverage_weight * cov_loss
        } else {
            0.0
        };
        loss += (nll + weighted) / steps_total;

        diag.p_gen.push(out.p_gen);
        diag.attention.push(out.attention.clone());
        diag.coverage_loss.push(cov_loss);
        diag.nll.push(nll);
        diag.predictions.push(argmax(&dist));

        coverages.push(attn_cov);
        coverage = next_cov;
        state = out.state.clone();
        steps.push(out);
    }
    Ok(Forward {
        loss,
        diag,
        enc,
        enc_cache,
        steps,
        coverages,
        inputs,
    })
}

/// Mean per-step loss under teacher forcing, with diagnostics.
pub fn forward_loss(params: &PgnParams, cfg: &PgnConfig, ex: &Example) -> Result<(f64, Diagnostics)> {
    let fw = run_forward(params, cfg, ex)?;
    Ok((fw.loss, fw.diag))
}

/// Loss plus analytic gradients, accumulated (scaled by `scale`) into `grads`.
pub fn loss_and_grad(
    params: &PgnParams,
    cfg: &PgnConfig,
    ex: &Example,
    grads: &mut PgnParams,
    scale: f64,
) -> Result<(f64, Diagnostics)> {
    let fw = run_forward(params, cfg, ex)?;
    backward(params, cfg, ex, &fw, grads, scale);
    Ok((fw.loss, fw.diag))
}

fn backward(
    params: &PgnParams,
    cfg: &PgnConfig,
    ex: &Example,
    fw: &Forward,
    grads: &mut PgnParams,
    scale: f64,
) {
    let hd = cfg.hidden_dim;
    let n = ex.src.len();
    let t_len = ex.tgt.len();
    let g = scale / t_len as f64;
    let lambda = if cfg.use_coverage { cfg.coverage_weight } else { 0.0 };

    let mut d_enc_states = vec![vec![0.0; 2 * hd]; n];
    // gradient w.r.t. the coverage entering the step after the current one
    let mut d_cov_next = vec![0.0; n];
    let mut d_state_next = CellState::zeros(cfg.cell, hd);

    for t in (0..t_len).rev() {
        let st = &fw.steps[t];
        let cov = &fw.coverages[t];
        let target = ex.tgt[t] as usize;
        let attn = &st.attention;

        let mut d_attn = vec![0.0; n];
        let mut d_cov = vec![0.0; n];
        if cfg.use_coverage {
            // c_{t+1} = c_t + a_t
            d_attn.copy_from_slice(&d_cov_next);
            d_cov.copy_from_slice(&d_cov_next);
        }

        // -ln P(y)
        let copy_mass: f64 = attn
            .iter()
            .zip(&ex.src_ext)
            .filter(|(_, &id)| id as usize == target)
            .map(|(a, _)| a)
            .sum();
        let gen_prob = if target < cfg.vocab_size {
            st.vocab_dist[target]
        } else {
            0.0
        };
        let p_y = st.p_gen * gen_prob + (1.0 - st.p_gen) * copy_mass;
        let d_py = -g / p_y;
        let d_pgen = d_py * (gen_prob - copy_mass);
        for (i, &id) in ex.src_ext.iter().enumerate() {
            if id as usize == target {
                d_attn[i] += d_py * (1.0 - st.p_gen);
            }
        }

        // λ Σ min(a, c); ties send the gradient to the attention side
        if lambda > 0.0 {
            for i in 0..n {
                if attn[i] <= cov[i] {
                    d_attn[i] += g * lambda;
                } else {
                    d_cov[i] += g * lambda;
                }
            }
        }

        let mut d_s = vec![0.0; hd];
        let mut d_ctx = vec![0.0; 2 * hd];
        let mut d_x = vec![0.0; cfg.embed_dim];

        // vocabulary softmax: only P_voc[y] receives gradient
        if target < cfg.vocab_size {
            let d_pv_y = d_py * st.p_gen;
            let d_logits: Vec<f64> = st
                .vocab_dist
                .iter()
                .enumerate()
                .map(|(k, &p)| d_pv_y * p * (if k == target { 1.0 } else { 0.0 } - gen_prob))
                .collect();
            grads.out_w2.outer_add(&d_logits, &st.hidden_out);
            grads.out_b2.add_assign(&d_logits);
            let mut d_hidden = vec![0.0; hd];
            params.out_w2.matvec_t_add(&d_logits, &mut d_hidden);
            grads.out_w1.outer_add(&d_hidden, &st.concat);
            grads.out_b1.add_assign(&d_hidden);
            let mut d_concat = vec![0.0; 3 * hd];
            params.out_w1.matvec_t_add(&d_hidden, &mut d_concat);
            axpy(1.0, &d_concat[..hd], &mut d_s);
            axpy(1.0, &d_concat[hd..], &mut d_ctx);
        }

        // copy gate
        let dz = d_pgen * st.p_gen * (1.0 - st.p_gen);
        let s = &st.state.h;
        axpy(dz, &st.context, &mut grads.ptr_wh.data);
        axpy(dz, s, &mut grads.ptr_ws.data);
        axpy(dz, &st.x, &mut grads.ptr_wx.data);
        grads.ptr_b.data[0] += dz;
        axpy(dz, &params.ptr_wh.data, &mut d_ctx);
        axpy(dz, &params.ptr_ws.data, &mut d_s);
        axpy(dz, &params.ptr_wx.data, &mut d_x);

        // context = Σ a_i h_i
        for i in 0..n {
            d_attn[i] += dot(&d_ctx, &fw.enc.states[i]);
            axpy(attn[i], &d_ctx, &mut d_enc_states[i]);
        }

        // attention scores
        let d_scores = softmax_backward(attn, &d_attn);
        let mut d_ws = vec![0.0; hd];
        let v = &params.attn_v.data;
        for i in 0..n {
            let u = &st.tanh_u[i];
            axpy(d_scores[i], u, &mut grads.attn_v.data);
            let du: Vec<f64> = (0..hd)
                .map(|k| d_scores[i] * v[k] * (1.0 - u[k] * u[k]))
                .collect();
            axpy(1.0, &du, &mut d_ws);
            grads.attn_wh.outer_add(&du, &fw.enc.states[i]);
            params.attn_wh.matvec_t_add(&du, &mut d_enc_states[i]);
            if cfg.use_coverage {
                axpy(cov[i], &du, &mut grads.attn_wc.data);
                d_cov[i] += dot(&params.attn_wc.data, &du);
            }
        }
        grads.attn_b.add_assign(&d_ws);
        grads.attn_ws.outer_add(&d_ws, s);
        params.attn_ws.matvec_t_add(&d_ws, &mut d_s);

        // decoder cell
        axpy(1.0, &d_state_next.h, &mut d_s);
        let (dx_cell, d_prev) = cell::backward(
            cfg.cell,
            &params.dec_w,
            &st.cell,
            &d_s,
            &d_state_next.c,
            &mut grads.dec_w,
            &mut grads.dec_b,
        );
        axpy(1.0, &dx_cell, &mut d_x);
        let input = fw.inputs[t] as usize;
        axpy(1.0, &d_x, grads.embedding.row_mut(input));

        d_state_next = d_prev;
        d_cov_next = d_cov;
    }

    // reduce layer: h0 = tanh(W [fwd_h_last; bwd_h_first] + b), likewise c0
    let cache = &fw.enc_cache;
    let init = &fw.enc.init;
    let d_zh: Vec<f64> = (0..hd)
        .map(|k| d_state_next.h[k] * (1.0 - init.h[k] * init.h[k]))
        .collect();
    grads.reduce_h_w.outer_add(&d_zh, &cache.reduce_h_in);
    grads.reduce_h_b.add_assign(&d_zh);
    let mut d_red_h = vec![0.0; 2 * hd];
    params.reduce_h_w.matvec_t_add(&d_zh, &mut d_red_h);
    let mut d_red_c = vec![0.0; 2 * hd];
    if cfg.cell == CellKind::Lstm {
        let d_zc: Vec<f64> = (0..hd)
            .map(|k| d_state_next.c[k] * (1.0 - init.c[k] * init.c[k]))
            .collect();
        grads.reduce_c_w.outer_add(&d_zc, &cache.reduce_c_in);
        grads.reduce_c_b.add_assign(&d_zc);
        params.reduce_c_w.matvec_t_add(&d_zc, &mut d_red_c);
    }
    let split = |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
        (v[..hd].to_vec(), v[hd..].to_vec())
    };
    let (fwd_dh_last, bwd_dh_first) = split(&d_red_h);
    let (fwd_dc_last, bwd_dc_first) = if cfg.cell == CellKind::Lstm {
        split(&d_red_c)
    } else {
        (Vec::new(), Vec::new())
    };

    // forward-direction encoder, last position first
    let mut dh = fwd_dh_last;
    let mut dc = fwd_dc_last;
    for i in (0..n).rev() {
        axpy(1.0, &d_enc_states[i][..hd], &mut dh);
        let (dx, prev) = cell::backward(
            cfg.cell,
            &params.enc_fwd_w,
            &cache.fwd[i],
            &dh,
            &dc,
            &mut grads.enc_fwd_w,
            &mut grads.enc_fwd_b,
        );
        axpy(1.0, &dx, grads.embedding.row_mut(ex.src[i] as usize));
        dh = prev.h;
        dc = prev.c;
    }

    // backward-direction encoder ran from the end, so unwind from position 0
    let mut dh = bwd_dh_first;
    let mut dc = bwd_dc_first;
    for (i, d_state) in d_enc_states.iter().enumerate() {
        axpy(1.0, &d_state[hd..], &mut dh);
        let (dx, prev) = cell::backward(
            cfg.cell,
            &params.enc_bwd_w,
            &cache.bwd[i],
            &dh,
            &dc,
            &mut grads.enc_bwd_w,
            &mut grads.enc_bwd_b,
        );
        axpy(1.0, &dx, grads.embedding.row_mut(ex.src[i] as usize));
        dh = prev.h;
        dc = prev.c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn final_distribution_examples() {
        let pv = vec![0.25; 4];
        let out = final_distribution(1.0, &pv, &[1.0], &[2], 0);
        assert_eq!(out, pv);

        let pv10 = vec![0.1; 10];
        let out = final_distribution(0.0, &pv10, &[0.5, 0.5], &[7, 7], 0);
        assert_eq!(out[7], 1.0);
        assert_eq!(out.iter().sum::<f64>(), 1.0);

        let out = final_distribution(0.5, &pv, &[1.0], &[2], 0);
        assert_eq!(out, vec![0.125, 0.125, 0.625, 0.125]);
    }

    #[test]
    fn copy_reaches_extended_ids() {
        let pv = vec![0.25; 4];
        let out = final_distribution(0.5, &pv, &[0.5, 0.5], &[4, 1], 1);
        assert_eq!(out.len(), 5);
        assert_eq!(out[4], 0.25);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_examples() {
        let (c1, l1) = coverage_step(&[0.0, 0.0], &[0.6, 0.4]);
        assert_eq!(l1, 0.0);
        let (_, l2) = coverage_step(&c1, &[0.6, 0.4]);
        assert!((l2 - 1.0).abs() < 1e-15);
        let (c1, _) = coverage_step(&[0.0, 0.0], &[1.0, 0.0]);
        let (_, l2) = coverage_step(&c1, &[0.0, 1.0]);
        assert_eq!(l2, 0.0);
    }

    fn tiny() -> PgnConfig {
        PgnConfig {
            vocab_size: 12,
            embed_dim: 3,
            hidden_dim: 4,
            max_src_len: 8,
            max_tgt_len: 5,
            ..PgnConfig::default()
        }
    }

    #[test]
    fn single_source_position_gets_full_attention() {
        let cfg = tiny();
        let params = PgnParams::init(&cfg);
        let enc = encode(&params, &cfg, &[5]);
        let (a, ctx) = attention(&params, &enc.init.h, &enc.states, &[0.3]);
        assert_eq!(a, vec![1.0]);
        assert_eq!(ctx, enc.states[0]);
    }

    #[test]
    fn rejects_bad_examples() {
        let cfg = tiny();
        let params = PgnParams::init(&cfg);
        let bad_target = Example::closed(vec![4, 5], vec![40, 3]);
        assert!(matches!(
            forward_loss(&params, &cfg, &bad_target),
            Err(PgnError::TargetOutOfRange { id: 40, .. })
        ));
        let empty = Example::closed(vec![], vec![3]);
        assert!(matches!(forward_loss(&params, &cfg, &empty), Err(PgnError::EmptySource)));
        let long = Example::closed(vec![4; 9], vec![3]);
        assert!(forward_loss(&params, &cfg, &long).is_err());
    }

    #[test]
    fn coverage_vector_is_running_sum() {
        let cfg = tiny();
        let params = PgnParams::init(&cfg);
        let ex = Example::closed(vec![4, 5, 6, 7], vec![5, 6, 7, 3]);
        let fw = run_forward(&params, &cfg, &ex).unwrap();
        let mut running = vec![0.0; 4];
        for (t, cov) in fw.coverages.iter().enumerate() {
            assert_eq!(cov, &running);
            for (r, a) in running.iter_mut().zip(&fw.steps[t].attention) {
                *r += a;
            }
        }
    }

    #[test]
    fn loss_is_linear_in_coverage_weight() {
        let base = tiny();
        let params = PgnParams::init(&base);
        let ex = Example::closed(vec![4, 5, 6, 7], vec![5, 6, 7, 3]);
        let at = |w: f64| {
            let cfg = PgnConfig {
                coverage_weight: w,
                ..base.clone()
            };
            forward_loss(&params, &cfg, &ex).unwrap()
        };
        let (l0, d0) = at(0.0);
        let (l1, d1) = at(0.5);
        let (l2, _) = at(1.0);
        let steps = d0.nll.len() as f64;
        assert!((l0 - d0.nll.iter().sum::<f64>() / steps).abs() < 1e-12);
        let cov_mean = d1.coverage_loss.iter().sum::<f64>() / steps;
        assert!((l1 - l0 - 0.5 * cov_mean).abs() < 1e-12);
        assert!((l2 - l1 - 0.5 * cov_mean).abs() < 1e-12);
    }
}
