use crate::bordered::{bordered_solve, solve_full, BorderedSystem, Elimination};
use crate::error::SolverError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence when the sup-norm of the update falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub elimination: Elimination,
    /// Also converged when the sup-norm of F falls below this. Near a
    /// singular point the update stalls at amplified noise while F does not.
    pub residual_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 8, elimination: Elimination::Block, residual_tol: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub last_update: f64,
}

/// Newton's method on z. `linearize` returns the bordered Jacobian at z with
/// right-hand side −F(z).
pub fn newton<F>(z: &mut [f64], opts: &NewtonOptions, mut linearize: F) -> Result<NewtonReport, SolverError>
where
    F: FnMut(&[f64]) -> Result<BorderedSystem, SolverError>,
{
    let mut last_update = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let sys = linearize(z)?;
        if sys.dim() != z.len() {
            return Err(SolverError::Shape(format!("system of size {} for {} unknowns", sys.dim(), z.len())));
        }
        if sys.rhs.iter().fold(0.0, |m: f64, r| m.max(r.abs())) <= opts.residual_tol {
            return Ok(NewtonReport { iterations: it - 1, last_update });
        }
        let sol = match opts.elimination {
            Elimination::Block => bordered_solve(&sys)?,
            Elimination::Full => solve_full(&sys)?,
        };
        last_update = sol.solution.iter().fold(0.0, |m, d| m.max(d.abs()));
        if !last_update.is_finite() {
            break;
        }
        z.iter_mut().zip(&sol.solution).for_each(|(a, d)| *a += d);
        if last_update <= opts.tol {
            return Ok(NewtonReport { iterations: it, last_update });
        }
    }
    Err(SolverError::NewtonDiverged { iterations: opts.max_iter, update: last_update })
}
