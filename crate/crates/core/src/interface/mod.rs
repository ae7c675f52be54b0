//! Checkpoints, the HTTP service and the command line.

pub mod api;
pub mod checkpoint;
pub mod cli;
pub mod server;
