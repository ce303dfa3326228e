//! Closed-form analysis of straight Helfrich cylinders: dispersion relation,
//! neutral curves, and amplitude equations for the primary bifurcations.

pub mod amplitude;
pub mod error;
pub mod linstab;

pub use error::CoreError;
