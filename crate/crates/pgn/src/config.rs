use serde::{Deserialize, Serialize};

use crate::error::{PgnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    /// Number of stacked gate blocks in the cell weight matrix.
    pub fn gates(self) -> usize {
        match self {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }
}

impl std::str::FromStr for CellKind {
    type Err = PgnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(PgnError::Config(format!("unknown cell `{other}`"))),
        }
    }
}

/// Shape and loss settings of a pointer-generator model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgnConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Per-direction encoder width, decoder width and attention width.
    pub hidden_dim: usize,
    pub max_src_len: usize,
    pub max_tgt_len: usize,
    /// Weight of the coverage penalty in the per-step loss.
    pub coverage_weight: f64,
    /// Whether the coverage vector feeds attention at all.
    pub use_coverage: bool,
    pub cell: CellKind,
    pub seed: u64,
}

impl Default for PgnConfig {
    fn default() -> Self {
        PgnConfig {
            vocab_size: 50,
            embed_dim: 16,
            hidden_dim: 32,
            max_src_len: 64,
            max_tgt_len: 16,
            coverage_weight: 1.0,
            use_coverage: true,
            cell: CellKind::Lstm,
            seed: 1,
        }
    }
}

impl PgnConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("max_src_len", self.max_src_len),
            ("max_tgt_len", self.max_tgt_len),
        ];
        for (name, v) in dims {
            if v < 1 {
                return Err(PgnError::Config(format!("{name} must be >= 1")));
            }
        }
        if self.vocab_size < 4 {
            return Err(PgnError::Config("vocab_size must cover the 4 reserved tokens".into()));
        }
        if self.coverage_weight.is_nan() || self.coverage_weight < 0.0 {
            return Err(PgnError::Config("coverage_weight must be >= 0".into()));
        }
        Ok(())
    }
}
