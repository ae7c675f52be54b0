//! Psychology-conditioned multi-character story generation.

pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod generation;
pub mod interface;
pub mod model;
pub mod numerics;
pub mod pmr;
pub mod seq2seq;
pub mod training;

pub use config::TrainConfig;
pub use error::{Error, Result};
pub use model::Model;
