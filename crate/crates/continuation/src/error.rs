use thiserror::Error;
use tubelab_solver::SolverError;
use tubelab_surface::SurfaceError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("corrector diverged with step {ds:.3e} below the minimum")]
    CorrectorDiverged { ds: f64 },
    #[error("eigen-solver breakdown: {0}")]
    EigenBreakdown(String),
    #[error("bisection did not converge; bracket λ₂ ∈ [{lo}, {hi}]")]
    Bisection { lo: f64, hi: f64 },
    #[error("branch switch fell back onto the trivial branch (amplitude {amplitude:.3e})")]
    TrivialFallback { amplitude: f64 },
    #[error("invalid request: {0}")]
    Invalid(String),
}

impl From<SurfaceError> for ContinuationError {
    fn from(e: SurfaceError) -> Self {
        ContinuationError::Solver(SolverError::Surface(e))
    }
}
