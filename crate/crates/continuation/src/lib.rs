//! Continuation of constrained steady states of periodic tubes in λ₂, with
//! bifurcation detection, branch switching and stability under fixed area
//! and volume.

pub mod bifurcation;
pub mod branch;
pub mod compare;
pub mod error;
pub mod output;
pub mod phase;
pub mod spectrum;
pub mod steady;
pub mod switch;

pub use bifurcation::{detect_bifurcations, BifurcationPoint};
pub use branch::{
    constrained_stability, continue_branch, continue_to_lambda2, continue_until, stability_on_frame, steady_state, trivial_state, Branch, BranchState,
    ContinuationSettings, Provenance, Stability,
};
pub use error::ContinuationError;
pub use output::{bifurcations_json, branch_csv};
pub use phase::{BranchKind, PhaseConditions};
pub use switch::switch_branch;
