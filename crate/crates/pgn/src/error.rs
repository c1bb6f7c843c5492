use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgnError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("target id {id} outside vocabulary of {vocab} + {extended} extended entries")]
    TargetOutOfRange { id: u32, vocab: usize, extended: usize },
    #[error("source sequence is empty")]
    EmptySource,
    #[error("source length {len} exceeds max_src_len {max}")]
    SourceTooLong { len: usize, max: usize },
    #[error("non-finite gradient in `{0}`")]
    NonFiniteGradient(String),
    #[error("training diverged at step {step}")]
    Diverged {
        step: usize,
        /// Parameters after the last step with a finite loss.
        last_good: Box<crate::params::PgnParams>,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PgnError>;
