//! A small pointer-generator network with coverage, trained on CPU in `f64`.
//!
//! Gradients are derived by hand and checked against finite differences
//! ([`gradcheck`]); training is single-threaded and bit-reproducible.

pub mod beam;
pub mod cell;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod model;
pub mod params;
pub mod tensor;
pub mod train;

pub use beam::{beam_search, decode_example, greedy, BeamConfig, Hypothesis, PgnDecoder, StepModel};
pub use checkpoint::Checkpoint;
pub use config::{CellKind, PgnConfig};
pub use data::{build_example, decode_ids, ExampleLimits, ExtendedVocabMap};
pub use error::{PgnError, Result};
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub use model::{attention, coverage_step, final_distribution, forward_loss, loss_and_grad, Diagnostics, Example};
pub use params::PgnParams;
pub use train::{copy_task, teacher_forced_accuracy, train, LossCurve, LossPoint, TrainConfig};
