//! Mixed-form residuals, bordered Newton solves and area/volume conserving flows.

pub mod bordered;
pub mod error;
pub mod flow;
pub mod mixed;
pub mod newton;
pub mod perturb;

pub use bordered::{bordered_solve, BorderedSolution, BorderedSystem, Elimination};
pub use error::SolverError;
pub use flow::{flow_step, run_flow, trajectory_csv, FlowControls, FlowRun, FlowState, StopReason, TrajectoryRow};
pub use mixed::{residual, Coefficients, Frame, Residual};
pub use newton::{newton, NewtonOptions, NewtonReport};
pub use perturb::{perturb_bump, perturb_eigen};
