pub mod baseline;
pub mod corpus;
pub mod error;
pub mod humaneval;
pub mod mechanisms;
pub mod metrics;
pub mod tokenize;

pub use error::{Error, Result};
