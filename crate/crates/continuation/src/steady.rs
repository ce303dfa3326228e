//! Steady equations with area constraint, phase conditions and one closing
//! linear functional, in the layout
//!   z = [u | H | λ₁ | λ₂ | s₁ … s_p]
//!   F = [eq1 | eq2 + Σ sᵢ·M·tᵢ | 𝒜 − 𝒜₀ | ⟨M·tᵢ, u⟩ | closure].

use faer::sparse::Triplet;
use tubelab_solver::mixed::{self, pad_u, Coefficients, Frame};
use tubelab_solver::{BorderedSystem, Elimination, NewtonOptions, NewtonReport};

use crate::error::ContinuationError;
use crate::phase::PhaseConditions;

/// Weak-form residual at which a corrector counts as converged regardless of
/// the update size.
pub const RESIDUAL_TOL: f64 = 1e-11;

/// ℓ(z) = ⟨u_row, u⟩ + lambda2_coef·λ₂ − target.
#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    pub u_row: Vec<f64>,
    pub lambda2_coef: f64,
    pub target: f64,
}

impl Closure {
    pub fn fixed_lambda2(n: usize, lambda2: f64) -> Self {
        Self { u_row: vec![0.0; n], lambda2_coef: 1.0, target: lambda2 }
    }

    fn value(&self, u: &[f64], lambda2: f64) -> f64 {
        self.u_row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() + self.lambda2_coef * lambda2 - self.target
    }
}

/// Steady problem posed on a frame (the base state has u = 0).
pub struct SteadyProblem<'a> {
    pub frame: &'a Frame,
    pub c0: f64,
    pub area_target: f64,
    /// M·tᵢ for each active phase condition.
    pub phase_rows: Vec<Vec<f64>>,
    /// Area used to scale ⟨u, M u⟩ in the arclength metric.
    pub metric_area: f64,
}

impl<'a> SteadyProblem<'a> {
    pub fn new(frame: &'a Frame, c0: f64, area_target: f64, phase: &PhaseConditions) -> Self {
        let rigid = frame.rigid_fields();
        let phase_rows = phase
            .active()
            .into_iter()
            .map(|i| rigid[i].iter().zip(&frame.base.mass).map(|(t, m)| t * m).collect())
            .collect();
        Self { frame, c0, area_target, phase_rows, metric_area: frame.base.area }
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn p(&self) -> usize {
        self.phase_rows.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n() + 2 + self.p()
    }

    /// z at the frame's base state.
    pub fn base_point(&self, lambda: (f64, f64), multipliers: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut z = vec![0.0; 2 * n];
        z[n..].copy_from_slice(&self.frame.base.mean_curvature());
        z.extend([lambda.0, lambda.1]);
        z.extend(multipliers.iter().take(self.p()));
        z.resize(self.dim(), 0.0);
        z
    }

    pub fn lambda(&self, z: &[f64]) -> (f64, f64) {
        let n = self.n();
        (z[2 * n], z[2 * n + 1])
    }

    pub fn multipliers<'z>(&self, z: &'z [f64]) -> &'z [f64] {
        &z[2 * self.n() + 2..]
    }

    /// W-inner product ⟨a_u, M b_u⟩/𝒜 + a_λ₂·b_λ₂.
    pub fn metric(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n();
        let mass = &self.frame.base.mass;
        (0..n).map(|i| a[i] * mass[i] * b[i]).sum::<f64>() / self.metric_area + a[2 * n + 1] * b[2 * n + 1]
    }

    /// Closure row ⟨τ, ·⟩_W.
    pub fn metric_row(&self, tau: &[f64]) -> (Vec<f64>, f64) {
        let n = self.n();
        let mass = &self.frame.base.mass;
        ((0..n).map(|i| tau[i] * mass[i] / self.metric_area).collect(), tau[2 * n + 1])
    }

    /// Linearization at z with the given last row; rhs = −F(z).
    pub fn linearize(&self, z: &[f64], closure: &Closure) -> Result<BorderedSystem, ContinuationError> {
        let n = self.n();
        let (u, h) = (&z[..n], &z[n..2 * n]);
        let (l1, l2) = self.lambda(z);
        let s = self.multipliers(z);
        let p = Coefficients { c0: self.c0, lambda1: l1, lambda2: l2 };
        let ev = mixed::evaluate(self.frame, u, h, &p)?;
        let core = mixed::jacobian(self.frame, u, h, &p)?;
        let [c1, c2] = mixed::lambda_columns(&ev.fields, h);
        let (ga, _) = self.frame.constraint_gradients(u);

        let mut rhs: Vec<f64> = ev.eq1.iter().map(|v| -v).collect();
        rhs.extend((0..n).map(|i| {
            let phase: f64 = self.phase_rows.iter().zip(s).map(|(w, sj)| w[i] * sj).sum();
            -(ev.eq2[i] + phase)
        }));
        rhs.push(-(ev.area - self.area_target));
        for w in &self.phase_rows {
            rhs.push(-w.iter().zip(u).map(|(a, b)| a * b).sum::<f64>());
        }
        rhs.push(-closure.value(u, l2));

        let mut cols = vec![c1, c2];
        let mut rows = vec![pad_u(&ga)];
        for w in &self.phase_rows {
            let mut col = vec![0.0; 2 * n];
            col[n..].copy_from_slice(w);
            cols.push(col);
            rows.push(pad_u(w));
        }
        rows.push(pad_u(&closure.u_row));
        let k = cols.len();
        let mut corner = vec![vec![0.0; k]; k];
        corner[k - 1][1] = closure.lambda2_coef;
        Ok(BorderedSystem { n: 2 * n, core, border_columns: cols, border_rows: rows, corner, rhs })
    }

    /// Jacobian of the steady equations without closure, with both
    /// constraints as rows and (λ₁, λ₂) as columns, for the stability pencil.
    /// When the two constraint gradients are parallel the volume row and the
    /// λ₂ column are dropped.
    pub fn stability_system(&self, lambda: (f64, f64)) -> Result<(BorderedSystem, bool), ContinuationError> {
        let n = self.n();
        let zero = vec![0.0; n];
        let h = self.frame.base.mean_curvature();
        let p = Coefficients { c0: self.c0, lambda1: lambda.0, lambda2: lambda.1 };
        let core: Vec<Triplet<usize, usize, f64>> = mixed::jacobian(self.frame, &zero, &h, &p)?;
        let [c1, c2] = mixed::lambda_columns(&self.frame.base, &h);
        let (ga, gv) = self.frame.constraint_gradients(&zero);
        let degenerate = mixed::angle_between(&ga, &gv) < tubelab_solver::flow::CMC_ANGLE;
        let (cols, rows) = if degenerate { (vec![c1], vec![pad_u(&ga)]) } else { (vec![c1, c2], vec![pad_u(&ga), pad_u(&gv)]) };
        let k = cols.len();
        let dim = 2 * n + k;
        Ok((
            BorderedSystem { n: 2 * n, core, border_columns: cols, border_rows: rows, corner: vec![vec![0.0; k]; k], rhs: vec![0.0; dim] },
            degenerate,
        ))
    }

    pub fn solve(&self, z: &mut [f64], closure: &Closure, tol: f64, max_iter: usize) -> Result<NewtonReport, ContinuationError> {
        let opts = NewtonOptions { tol, max_iter, elimination: Elimination::Full, residual_tol: RESIDUAL_TOL };
        Ok(tubelab_solver::newton(z, &opts, |z| self.linearize(z, closure).map_err(|e| match e {
            ContinuationError::Solver(s) => s,
            other => tubelab_solver::SolverError::Invalid(other.to_string()),
        }))?)
    }

    /// Tangent of the solution curve at z, normalized in the W metric and
    /// oriented so that ⟨τ, guess⟩_W > 0.
    pub fn tangent(&self, z: &[f64], guess: &[f64]) -> Result<Vec<f64>, ContinuationError> {
        let (u_row, lambda2_coef) = self.metric_row(guess);
        let closure = Closure { u_row, lambda2_coef, target: 0.0 };
        let mut sys = self.linearize(z, &closure)?;
        let dim = sys.dim();
        sys.rhs = vec![0.0; dim];
        sys.rhs[dim - 1] = 1.0;
        let mut tau = tubelab_solver::bordered::solve_full(&sys)?.solution;
        let norm = self.metric(&tau, &tau).sqrt();
        if !(norm > 0.0) {
            return Err(ContinuationError::Invalid("tangent vanished".into()));
        }
        let sign = if self.metric(&tau, guess) < 0.0 { -1.0 } else { 1.0 };
        tau.iter_mut().for_each(|t| *t *= sign / norm);
        Ok(tau)
    }
}
