//! Command implementations behind the `tubelab` binary.

pub mod commands;
pub mod config;

pub use commands::{cmd_ae, cmd_compare, cmd_continue, cmd_flow, cmd_mesh, cmd_stability, Ctx};
