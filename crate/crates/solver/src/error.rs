use thiserror::Error;
use tubelab_surface::SurfaceError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("invalid bordered system: {0}")]
    Shape(String),
    #[error("border block is singular (conditioning ratio {ratio:.3e}); constraints are nearly dependent")]
    SingularBorder { ratio: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("Newton did not converge in {iterations} iterations (last update {update:.3e})")]
    NewtonDiverged { iterations: usize, update: f64 },
    #[error("step size {h:.3e} fell below the minimum at t = {time:.6}")]
    StepTooSmall { h: f64, time: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}
