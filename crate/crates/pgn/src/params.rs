use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CellKind, PgnConfig};
use crate::tensor::Matrix;

/// Every learnable tensor of the pointer-generator.
///
/// Shapes (E = embed, H = hidden, V = vocab, G = gate count of the cell):
/// embedding V×E; encoder and decoder cells GH×(E+H) plus GH biases;
/// reduce layers H×2H mapping the final encoder states to the decoder start
/// state (the cell-state reduce is empty for GRU); attention W_h H×2H,
/// W_s H×H, w_c/b_attn/v of length H; output projection H×3H then V×H;
/// pointer weights over context (2H), decoder state (H) and input (E).
#[derive(Debug, Clone, PartialEq)]
pub struct PgnParams {
    pub embedding: Matrix,
    pub enc_fwd_w: Matrix,
    pub enc_fwd_b: Matrix,
    pub enc_bwd_w: Matrix,
    pub enc_bwd_b: Matrix,
    pub reduce_h_w: Matrix,
    pub reduce_h_b: Matrix,
    pub reduce_c_w: Matrix,
    pub reduce_c_b: Matrix,
    pub dec_w: Matrix,
    pub dec_b: Matrix,
    pub attn_wh: Matrix,
    pub attn_ws: Matrix,
    pub attn_wc: Matrix,
    pub attn_b: Matrix,
    pub attn_v: Matrix,
    pub out_w1: Matrix,
    pub out_b1: Matrix,
    pub out_w2: Matrix,
    pub out_b2: Matrix,
    pub ptr_wh: Matrix,
    pub ptr_ws: Matrix,
    pub ptr_wx: Matrix,
    pub ptr_b: Matrix,
}

pub const TENSOR_NAMES: [&str; 24] = [
    "embedding",
    "enc_fwd_w",
    "enc_fwd_b",
    "enc_bwd_w",
    "enc_bwd_b",
    "reduce_h_w",
    "reduce_h_b",
    "reduce_c_w",
    "reduce_c_b",
    "dec_w",
    "dec_b",
    "attn_wh",
    "attn_ws",
    "attn_wc",
    "attn_b",
    "attn_v",
    "out_w1",
    "out_b1",
    "out_w2",
    "out_b2",
    "ptr_wh",
    "ptr_ws",
    "ptr_wx",
    "ptr_b",
];

/// Whether a tensor is a bias (initialized to zero).
fn is_bias(name: &str) -> bool {
    name.ends_with("_b") || name.ends_with("_b1") || name.ends_with("_b2")
}

impl PgnParams {
    /// All-zero tensors with the shapes implied by `cfg`.
    pub fn zeros(cfg: &PgnConfig) -> Self {
        let (v, e, h) = (cfg.vocab_size, cfg.embed_dim, cfg.hidden_dim);
        let g = cfg.cell.gates();
        let (rc_rows, rc_cols) = match cfg.cell {
            CellKind::Lstm => (h, 2 * h),
            CellKind::Gru => (0, 0),
        };
        PgnParams {
            embedding: Matrix::zeros(v, e),
            enc_fwd_w: Matrix::zeros(g * h, e + h),
            enc_fwd_b: Matrix::vector(g * h),
            enc_bwd_w: Matrix::zeros(g * h, e + h),
            enc_bwd_b: Matrix::vector(g * h),
            reduce_h_w: Matrix::zeros(h, 2 * h),
            reduce_h_b: Matrix::vector(h),
            reduce_c_w: Matrix::zeros(rc_rows, rc_cols),
            reduce_c_b: Matrix::vector(rc_rows),
            dec_w: Matrix::zeros(g * h, e + h),
            dec_b: Matrix::vector(g * h),
            attn_wh: Matrix::zeros(h, 2 * h),
            attn_ws: Matrix::zeros(h, h),
            attn_wc: Matrix::vector(h),
            attn_b: Matrix::vector(h),
            attn_v: Matrix::vector(h),
            out_w1: Matrix::zeros(h, 3 * h),
            out_b1: Matrix::vector(h),
            out_w2: Matrix::zeros(v, h),
            out_b2: Matrix::vector(v),
            ptr_wh: Matrix::vector(2 * h),
            ptr_ws: Matrix::vector(h),
            ptr_wx: Matrix::vector(e),
            ptr_b: Matrix::vector(1),
        }
    }

    /// Uniform(−0.1, 0.1) weights and zero biases from `cfg.seed`.
    pub fn init(cfg: &PgnConfig) -> Self {
        let mut params = Self::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for (name, t) in params.tensors_mut() {
            if is_bias(name) {
                continue;
            }
            for w in &mut t.data {
                *w = rng.random_range(-0.1..0.1);
            }
        }
        params
    }

    pub fn tensors(&self) -> [(&'static str, &Matrix); 24] {
        [
            ("embedding", &self.embedding),
            ("enc_fwd_w", &self.enc_fwd_w),
            ("enc_fwd_b", &self.enc_fwd_b),
            ("enc_bwd_w", &self.enc_bwd_w),
            ("enc_bwd_b", &self.enc_bwd_b),
            ("reduce_h_w", &self.reduce_h_w),
            ("reduce_h_b", &self.reduce_h_b),
            ("reduce_c_w", &self.reduce_c_w),
            ("reduce_c_b", &self.reduce_c_b),
            ("dec_w", &self.dec_w),
            ("dec_b", &self.dec_b),
            ("attn_wh", &self.attn_wh),
            ("attn_ws", &self.attn_ws),
            ("attn_wc", &self.attn_wc),
            ("attn_b", &self.attn_b),
            ("attn_v", &self.attn_v),
            ("out_w1", &self.out_w1),
            ("out_b1", &self.out_b1),
            ("out_w2", &self.out_w2),
            ("out_b2", &self.out_b2),
            ("ptr_wh", &self.ptr_wh),
            ("ptr_ws", &self.ptr_ws),
            ("ptr_wx", &self.ptr_wx),
            ("ptr_b", &self.ptr_b),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Matrix); 24] {
        [
            ("embedding", &mut self.embedding),
            ("enc_fwd_w", &mut self.enc_fwd_w),
            ("enc_fwd_b", &mut self.enc_fwd_b),
            ("enc_bwd_w", &mut self.enc_bwd_w),
            ("enc_bwd_b", &mut self.enc_bwd_b),
            ("reduce_h_w", &mut self.reduce_h_w),
            ("reduce_h_b", &mut self.reduce_h_b),
            ("reduce_c_w", &mut self.reduce_c_w),
            ("reduce_c_b", &mut self.reduce_c_b),
            ("dec_w", &mut self.dec_w),
            ("dec_b", &mut self.dec_b),
            ("attn_wh", &mut self.attn_wh),
            ("attn_ws", &mut self.attn_ws),
            ("attn_wc", &mut self.attn_wc),
            ("attn_b", &mut self.attn_b),
            ("attn_v", &mut self.attn_v),
            ("out_w1", &mut self.out_w1),
            ("out_b1", &mut self.out_b1),
            ("out_w2", &mut self.out_w2),
            ("out_b2", &mut self.out_b2),
            ("ptr_wh", &mut self.ptr_wh),
            ("ptr_ws", &mut self.ptr_ws),
            ("ptr_wx", &mut self.ptr_wx),
            ("ptr_b", &mut self.ptr_b),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Zero every entry in place.
    pub fn clear(&mut self) {
        for (_, t) in self.tensors_mut() {
            t.data.fill(0.0);
        }
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &PgnParams, scale: f64) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += scale * y;
            }
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.data.iter())
            .map(|x| x * x)
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.data.iter().all(|x| x.is_finite()))
    }

    /// Name of the first tensor holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.tensors()
            .into_iter()
            .find(|(_, t)| t.data.iter().any(|x| !x.is_finite()))
            .map(|(n, _)| n)
    }
}
