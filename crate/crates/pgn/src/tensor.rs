use serde::{Deserialize, Serialize};

/// Dense row-major matrix. Vectors are stored as `n x 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn vector(len: usize) -> Self {
        Self::zeros(len, 1)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out = self · x`
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(r), x);
        }
    }

    /// `out = self[row_lo..row_hi] · x`
    pub fn matvec_rows(&self, row_lo: usize, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(row_lo + k), x);
        }
    }

    /// `dx += selfᵀ · dy`
    pub fn matvec_t_add(&self, dy: &[f64], dx: &mut [f64]) {
        debug_assert_eq!(dy.len(), self.rows);
        debug_assert_eq!(dx.len(), self.cols);
        for (r, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (d, &w) in dx.iter_mut().zip(self.row(r)) {
                *d += g * w;
            }
        }
    }

    /// `self += dy ⊗ x`
    pub fn outer_add(&mut self, dy: &[f64], x: &[f64]) {
        debug_assert_eq!(dy.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (w, &v) in self.row_mut(r).iter_mut().zip(x) {
                *w += g * v;
            }
        }
    }

    pub fn add_assign(&mut self, other: &[f64]) {
        for (a, b) in self.data.iter_mut().zip(other) {
            *a += b;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax (max subtracted first).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for o in &mut out {
        *o /= sum;
    }
    out
}

/// Backward pass of softmax: `dz_i = p_i (dp_i - Σ_j p_j dp_j)`.
pub fn softmax_backward(p: &[f64], dp: &[f64]) -> Vec<f64> {
    let inner = dot(p, dp);
    p.iter().zip(dp).map(|(&pi, &gi)| pi * (gi - inner)).collect()
}
