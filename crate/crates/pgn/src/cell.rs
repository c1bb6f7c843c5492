//! LSTM and GRU cells with explicit forward caches and backward passes.
//!
//! Weights are one `G·H × (X+H)` matrix over the concatenated `[x; h]` input.
//! LSTM gate blocks are ordered input, forget, candidate, output. GRU blocks are
//! reset, update, candidate; the candidate block sees `[x; r ⊙ h]`.

use crate::config::CellKind;
use crate::tensor::{sigmoid, Matrix};

/// Recurrent state; `c` is empty for GRU.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl CellState {
    pub fn zeros(kind: CellKind, hidden: usize) -> Self {
        CellState {
            h: vec![0.0; hidden],
            c: match kind {
                CellKind::Lstm => vec![0.0; hidden],
                CellKind::Gru => Vec::new(),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellCache {
    input: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Gate activations, `G·H` long.
    gates: Vec<f64>,
    /// LSTM: tanh(c). GRU: the `[x; r ⊙ h]` input of the candidate block.
    aux: Vec<f64>,
}

pub fn forward(
    kind: CellKind,
    w: &Matrix,
    b: &Matrix,
    x: &[f64],
    prev: &CellState,
) -> (CellState, CellCache) {
    let hd = prev.h.len();
    let mut input = Vec::with_capacity(x.len() + hd);
    input.extend_from_slice(x);
    input.extend_from_slice(&prev.h);
    match kind {
        CellKind::Lstm => {
            let mut z = vec![0.0; 4 * hd];
            w.matvec(&input, &mut z);
            for (zi, bi) in z.iter_mut().zip(&b.data) {
                *zi += bi;
            }
            let mut gates = z;
            for k in 0..hd {
                gates[k] = sigmoid(gates[k]);
                gates[hd + k] = sigmoid(gates[hd + k]);
                gates[2 * hd + k] = gates[2 * hd + k].tanh();
                gates[3 * hd + k] = sigmoid(gates[3 * hd + k]);
            }
            let mut c = vec![0.0; hd];
            let mut h = vec![0.0; hd];
            let mut tanh_c = vec![0.0; hd];
            for k in 0..hd {
                c[k] = gates[hd + k] * prev.c[k] + gates[k] * gates[2 * hd + k];
                tanh_c[k] = c[k].tanh();
                h[k] = gates[3 * hd + k] * tanh_c[k];
            }
            let cache = CellCache {
                input,
                h_prev: prev.h.clone(),
                c_prev: prev.c.clone(),
                gates,
                aux: tanh_c,
            };
            (CellState { h, c }, cache)
        }
        CellKind::Gru => {
            let mut gates = vec![0.0; 3 * hd];
            w.matvec_rows(0, &input, &mut gates[..2 * hd]);
            for (g, bias) in gates[..2 * hd].iter_mut().zip(&b.data) {
                *g = sigmoid(*g + bias);
            }
            let mut cand_input = input.clone();
            for k in 0..hd {
                cand_input[x.len() + k] = gates[k] * prev.h[k];
            }
            w.matvec_rows(2 * hd, &cand_input, &mut gates[2 * hd..]);
            for k in 0..hd {
                gates[2 * hd + k] = (gates[2 * hd + k] + b.data[2 * hd + k]).tanh();
            }
            let h: Vec<f64> = (0..hd)
                .map(|k| {
                    let z = gates[hd + k];
                    (1.0 - z) * gates[2 * hd + k] + z * prev.h[k]
                })
                .collect();
            let cache = CellCache {
                input,
                h_prev: prev.h.clone(),
                c_prev: Vec::new(),
                gates,
                aux: cand_input,
            };
            (CellState { h, c: Vec::new() }, cache)
        }
    }
}

/// Backward through one cell step. `dh`/`dc` are gradients with respect to the
/// step's output state; returns `(dx, d_prev_state)` and accumulates weight grads.
pub fn backward(
    kind: CellKind,
    w: &Matrix,
    cache: &CellCache,
    dh: &[f64],
    dc: &[f64],
    dw: &mut Matrix,
    db: &mut Matrix,
) -> (Vec<f64>, CellState) {
    let hd = cache.h_prev.len();
    let xd = cache.input.len() - hd;
    let g = &cache.gates;
    match kind {
        CellKind::Lstm => {
            let tanh_c = &cache.aux;
            let mut dz = vec![0.0; 4 * hd];
            let mut dc_prev = vec![0.0; hd];
            for k in 0..hd {
                let (i, f, cand, o) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
                let dct = dc[k] + dh[k] * o * (1.0 - tanh_c[k] * tanh_c[k]);
                dz[k] = dct * cand * i * (1.0 - i);
                dz[hd + k] = dct * cache.c_prev[k] * f * (1.0 - f);
                dz[2 * hd + k] = dct * i * (1.0 - cand * cand);
                dz[3 * hd + k] = dh[k] * tanh_c[k] * o * (1.0 - o);
                dc_prev[k] = dct * f;
            }
            dw.outer_add(&dz, &cache.input);
            db.add_assign(&dz);
            let mut dinput = vec![0.0; xd + hd];
            w.matvec_t_add(&dz, &mut dinput);
            let dh_prev = dinput.split_off(xd);
            (dinput, CellState { h: dh_prev, c: dc_prev })
        }
        CellKind::Gru => {
            let cand_input = &cache.aux;
            let mut dz = vec![0.0; 3 * hd];
            let mut dh_prev = vec![0.0; hd];
            for k in 0..hd {
                let (z, n) = (g[hd + k], g[2 * hd + k]);
                dh_prev[k] = dh[k] * z;
                dz[hd + k] = dh[k] * (cache.h_prev[k] - n) * z * (1.0 - z);
                dz[2 * hd + k] = dh[k] * (1.0 - z) * (1.0 - n * n);
            }
            // candidate block sees [x; r ⊙ h]
            let mut dcand = vec![0.0; xd + hd];
            for (k, &d) in dz[2 * hd..].iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = w.row(2 * hd + k);
                for (acc, &wv) in dcand.iter_mut().zip(row) {
                    *acc += d * wv;
                }
                let drow = dw.row_mut(2 * hd + k);
                for (acc, &v) in drow.iter_mut().zip(cand_input) {
                    *acc += d * v;
                }
            }
            for k in 0..hd {
                let r = g[k];
                let drh = dcand[xd + k];
                dh_prev[k] += drh * r;
                dz[k] = drh * cache.h_prev[k] * r * (1.0 - r);
            }
            let mut dinput = dcand;
            dinput[xd..].fill(0.0);
            for (k, &d) in dz[..2 * hd].iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = w.row(k);
                for (acc, &wv) in dinput.iter_mut().zip(row) {
                    *acc += d * wv;
                }
                let drow = dw.row_mut(k);
                for (acc, &v) in drow.iter_mut().zip(&cache.input) {
                    *acc += d * v;
                }
            }
            db.add_assign(&dz);
            let dh_rec = dinput.split_off(xd);
            for (a, b) in dh_prev.iter_mut().zip(dh_rec) {
                *a += b;
            }
            (dinput, CellState { h: dh_prev, c: Vec::new() })
        }
    }
}
