//! Versioned JSON checkpoints of named tensors plus configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PgnConfig;
use crate::error::{PgnError, Result};
use crate::params::PgnParams;
use crate::tensor::Matrix;

pub const FORMAT: &str = "headline-pgn";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: PgnConfig,
    /// Seed of the training run that produced the weights.
    pub seed: u64,
    /// Vocabulary tokens in id order.
    pub vocab: Vec<String>,
    pub tensors: BTreeMap<String, Matrix>,
}

impl Checkpoint {
    pub fn new(config: &PgnConfig, seed: u64, vocab: Vec<String>, params: &PgnParams) -> Self {
        Checkpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            config: config.clone(),
            seed,
            vocab,
            tensors: params
                .tensors()
                .into_iter()
                .map(|(n, t)| (n.to_string(), t.clone()))
                .collect(),
        }
    }

    /// Rebuilds parameters, checking every tensor against the configured shape.
    pub fn params(&self) -> Result<PgnParams> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(PgnError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        self.config.validate()?;
        if self.vocab.len() != self.config.vocab_size {
            return Err(PgnError::Checkpoint(format!(
                "vocabulary has {} tokens, config expects {}",
                self.vocab.len(),
                self.config.vocab_size
            )));
        }
        let mut params = PgnParams::zeros(&self.config);
        for (name, slot) in params.tensors_mut() {
            let stored = self
                .tensors
                .get(name)
                .ok_or_else(|| PgnError::Checkpoint(format!("missing tensor `{name}`")))?;
            if (stored.rows, stored.cols) != (slot.rows, slot.cols)
                || stored.data.len() != slot.data.len()
            {
                return Err(PgnError::Checkpoint(format!(
                    "tensor `{name}` is {}x{}, expected {}x{}",
                    stored.rows, stored.cols, slot.rows, slot.cols
                )));
            }
            slot.data.copy_from_slice(&stored.data);
        }
        if self.tensors.len() != params.tensors().len() {
            return Err(PgnError::Checkpoint("unexpected extra tensors".into()));
        }
        if let Some(name) = params.first_non_finite() {
            return Err(PgnError::Checkpoint(format!("tensor `{name}` is not finite")));
        }
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(file)?)
    }
}
