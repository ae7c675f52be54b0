//! Dense tensors, reverse-mode differentiation, Adam, dropout and the
//! finite-difference tools used to verify gradients.

pub mod adam;
pub mod fd;
pub mod graph;
pub mod params;
pub mod rng;
pub mod tensor;
pub mod vectors;

pub use adam::{clip_global_norm, AdamConfig, AdamState};
pub use graph::{dropout, Axis, Gradients, Graph, Var};
pub use params::{Bound, Init, ParamId, ParamStore};
pub use tensor::{argmax, Scalar, Tensor};
