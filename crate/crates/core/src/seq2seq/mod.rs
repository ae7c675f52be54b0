//! Encoder, character selector, state controller and decoder.

pub mod layout;
pub mod network;
pub mod trace;

pub use layout::{param_specs, Layout, ParamSpec};
pub use network::{CharacterGate, EncoderOutput, Forward, LstmState, Network, StepOutput, TeacherForced};
pub use trace::{AttentionTrace, StepTrace};
