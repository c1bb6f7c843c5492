use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("invalid split ratios {0:?}: must be positive and sum to 100")]
    InvalidRatios([u32; 3]),
    #[error("cannot split {available} articles into {partitions} partitions")]
    TooFewArticles { available: usize, partitions: usize },
    #[error("bpe training corpus is empty")]
    EmptyCorpus,
    #[error("malformed bpe sequence: {0}")]
    MalformedBpe(String),
    #[error("malformed model file: {0}")]
    ModelFormat(String),
    #[error("empty corpus passed to corpus-level bleu")]
    EmptyBleuCorpus,
    #[error("length mismatch: {refs} references vs {hyps} hypotheses")]
    LengthMismatch { refs: usize, hyps: usize },
    #[error("alignment mismatch: {left} articles vs {right} headlines")]
    Misaligned { left: usize, right: usize },
    #[error("duplicate vote from annotator `{annotator}` on item `{item}`")]
    DuplicateVote { item: String, annotator: String },
    #[error("invalid vote choice `{0}` (expected MODEL, HUMAN or DRAW)")]
    InvalidChoice(String),
    #[error("malformed record at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("vocabulary lacks required token `{0}`")]
    MissingToken(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
