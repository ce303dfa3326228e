use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tubelab_solver::mixed::{self, Coefficients, Frame};
use tubelab_surface::deform::project_amplitude;
use tubelab_surface::geometry::{geometry_report, GeometryReport};
use tubelab_surface::{adapt, mesh_quality, AdaptOptions, SurfaceMesh};

use crate::error::ContinuationError;
use crate::phase::{BranchKind, PhaseConditions};
use crate::spectrum::{leading_eigenpairs, ArnoldiOptions};
use crate::steady::{Closure, SteadyProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationSettings {
    pub c0: f64,
    /// Newton update tolerance (sup-norm).
    pub tol: f64,
    pub max_newton: usize,
    pub ds_min: f64,
    pub ds_max: f64,
    pub n_eigs: usize,
    /// Fourier mode (m, n) whose amplitude is recorded.
    pub track_mode: (i32, i32),
    /// Raw quality quotient above which the mesh is adapted.
    pub q_max: f64,
    pub stability: bool,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            c0: 0.0,
            tol: 1e-9,
            max_newton: 10,
            ds_min: 1e-6,
            ds_max: 0.1,
            n_eigs: 12,
            track_mode: (1, 0),
            q_max: 8.0,
            stability: true,
        }
    }
}

impl ContinuationSettings {
    pub fn validate(&self) -> Result<(), ContinuationError> {
        let ok = self.tol > 0.0
            && self.max_newton > 0
            && self.ds_min > 0.0
            && self.ds_min <= self.ds_max
            && self.n_eigs > 0
            && self.q_max > 0.0
            && self.c0.is_finite();
        if ok {
            Ok(())
        } else {
            Err(ContinuationError::Invalid(format!("inconsistent continuation settings {self:?}")))
        }
    }
}

/// Eigenvalues with real part above this count as unstable.
pub const UNSTABLE_TOL: f64 = 1e-8;
/// Fraction of an eigenvector inside the rigid-motion span that marks it translational.
pub const RIGID_FRACTION: f64 = 0.9;
/// Eigenvalues of rigid modes must also be this small. Normal-only
/// displacements are translations only up to O(h²), so discrete rigid modes
/// sit near 1e-3 rather than at zero.
pub const RIGID_EIGENVALUE: f64 = 5e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct Stability {
    /// Leading non-rigid eigenvalues, by decreasing real part.
    pub eigenvalues: Vec<Complex64>,
    /// Real u-parts of the corresponding eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    pub translational: Vec<Complex64>,
    pub n_unstable: usize,
    /// Area and volume gradients were parallel and one constraint was dropped.
    pub constraints_degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct BranchState {
    pub mesh: SurfaceMesh,
    pub lambda: (f64, f64),
    pub kind: BranchKind,
    /// Phase-condition multipliers in `PhaseConditions::active` order.
    pub multipliers: Vec<f64>,
    pub area_target: f64,
    pub diagnostics: GeometryReport,
    pub spectrum: Vec<Complex64>,
    pub translational: Vec<Complex64>,
    pub n_unstable: usize,
    pub amplitude: Complex64,
    pub arclength: f64,
    /// Sup-norm of the weak-form residual.
    pub residual_sup: f64,
    /// Unit tangent in this state's own frame, if known.
    pub tangent: Option<Vec<f64>>,
}

impl BranchState {
    pub fn phase(&self) -> PhaseConditions {
        PhaseConditions::for_kind(self.kind)
    }

    /// Largest real part among non-rigid eigenvalues.
    pub fn leading_eigenvalue(&self) -> Option<Complex64> {
        self.spectrum.first().copied()
    }
}

/// Generalized eigenproblem at a converged state, with both constraint
/// borders and free (λ₁, λ₂); rigid zero modes are reported separately.
pub fn stability_on_frame(
    frame: &Frame,
    c0: f64,
    lambda: (f64, f64),
    n_eigs: usize,
) -> Result<Stability, ContinuationError> {
    let problem = SteadyProblem::new(frame, c0, frame.base.area, &PhaseConditions::for_kind(BranchKind::Trivial));
    let (sys, degenerate) = problem.stability_system(lambda)?;
    let n = frame.n();
    let opts = ArnoldiOptions { n_eigs, ..Default::default() };
    let pairs = leading_eigenpairs(&sys, &frame.base.mass, n, &opts)?;

    let mass = &frame.base.mass;
    let mdot = |a: &[f64], b: &[f64]| -> f64 { (0..n).map(|i| a[i] * mass[i] * b[i]).sum() };
    // M-orthonormal basis of the non-vanishing rigid fields.
    let mut rigid: Vec<Vec<f64>> = Vec::new();
    for mut f in frame.rigid_fields() {
        for q in &rigid {
            let c = mdot(&f, q);
            f.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
        let nrm = mdot(&f, &f).sqrt();
        if nrm > 1e-6 * frame.base.area.sqrt() {
            f.iter_mut().for_each(|x| *x /= nrm);
            rigid.push(f);
        }
    }

    let mut st = Stability {
        eigenvalues: Vec::new(),
        vectors: Vec::new(),
        translational: Vec::new(),
        n_unstable: 0,
        constraints_degenerate: degenerate,
    };
    for p in pairs {
        let v: Vec<f64> = p.vector[..n].iter().map(|c| c.re).collect();
        let total = mdot(&v, &v);
        let inside: f64 = rigid.iter().map(|q| mdot(&v, q).powi(2)).sum();
        if p.value.norm() < RIGID_EIGENVALUE && total > 0.0 && inside > RIGID_FRACTION * total {
            st.translational.push(p.value);
            continue;
        }
        if st.eigenvalues.len() < n_eigs {
            st.n_unstable += (p.value.re > UNSTABLE_TOL) as usize;
            st.eigenvalues.push(p.value);
            st.vectors.push(v);
        } else if p.value.re > UNSTABLE_TOL {
            st.n_unstable += 1;
        }
    }
    Ok(st)
}

pub fn constrained_stability(state: &BranchState, c0: f64, n_eigs: usize) -> Result<Stability, ContinuationError> {
    let frame = Frame::new(state.mesh.clone())?;
    stability_on_frame(&frame, c0, state.lambda, n_eigs)
}

/// Builds the record for a converged solution z of `problem`.
pub(crate) fn finish_state(
    problem: &SteadyProblem,
    z: &[f64],
    kind: BranchKind,
    settings: &ContinuationSettings,
    arclength: f64,
) -> Result<(BranchState, Frame), ContinuationError> {
    let n = problem.n();
    let mesh = problem.frame.mesh_at(&z[..n])?;
    let frame = Frame::new(mesh.clone())?;
    let lambda = problem.lambda(z);
    let multipliers = problem.multipliers(z).to_vec();
    let next = SteadyProblem::new(&frame, settings.c0, problem.area_target, &PhaseConditions::for_kind(kind));
    let h = frame.base.mean_curvature();
    let ev = mixed::evaluate(&frame, &vec![0.0; n], &h, &Coefficients { c0: settings.c0, lambda1: lambda.0, lambda2: lambda.1 })?;
    let residual_sup = (0..n)
        .map(|i| {
            let phase: f64 = next.phase_rows.iter().zip(&multipliers).map(|(w, s)| w[i] * s).sum();
            (ev.eq2[i] + phase).abs()
        })
        .fold(0.0, f64::max);
    let (m, nn) = settings.track_mode;
    let mut state = BranchState {
        diagnostics: geometry_report(&mesh, settings.c0)?,
        amplitude: project_amplitude(&mesh, m, nn)?,
        mesh,
        lambda,
        kind,
        multipliers,
        area_target: problem.area_target,
        spectrum: Vec::new(),
        translational: Vec::new(),
        n_unstable: 0,
        arclength,
        residual_sup,
        tangent: None,
    };
    if settings.stability {
        let st = stability_on_frame(&frame, settings.c0, lambda, settings.n_eigs)?;
        state.spectrum = st.eigenvalues;
        state.translational = st.translational;
        state.n_unstable = st.n_unstable;
    }
    Ok((state, frame))
}

/// Converges a steady state on `mesh` at fixed λ₂ (natural parameter).
pub fn steady_state(
    mesh: SurfaceMesh,
    kind: BranchKind,
    lambda_guess: (f64, f64),
    area_target: Option<f64>,
    settings: &ContinuationSettings,
) -> Result<BranchState, ContinuationError> {
    settings.validate()?;
    let frame = Frame::new(mesh)?;
    let area_target = area_target.unwrap_or(frame.base.area);
    let problem = SteadyProblem::new(&frame, settings.c0, area_target, &PhaseConditions::for_kind(kind));
    let mut z = problem.base_point(lambda_guess, &[]);
    let closure = Closure::fixed_lambda2(problem.n(), lambda_guess.1);
    problem.solve(&mut z, &closure, settings.tol, settings.max_newton)?;
    let (mut state, frame) = finish_state(&problem, &z, kind, settings, 0.0)?;
    let next = SteadyProblem::new(&frame, settings.c0, area_target, &state.phase());
    let z0 = next.base_point(state.lambda, &state.multipliers);
    let mut guess = vec![0.0; next.dim()];
    guess[2 * next.n() + 1] = 1.0;
    state.tangent = Some(next.tangent(&z0, &guess)?);
    Ok(state)
}

/// Straight cylinder on the trivial branch at the given λ₂.
pub fn trivial_state(mesh: SurfaceMesh, lambda2: f64, settings: &ContinuationSettings) -> Result<BranchState, ContinuationError> {
    let r = mesh.radius;
    let lambda1 = tubelab_core::linstab::lambda1_on_cylinder(lambda2, settings.c0, r)
        .map_err(|e| ContinuationError::Invalid(e.to_string()))?;
    steady_state(mesh, BranchKind::Trivial, (lambda1, lambda2), None, settings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Provenance {
    Trivial,
    Primary { m: i32, n: i32 },
    Secondary { parent_lambda2: f64 },
    Seed,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub kind: BranchKind,
    pub provenance: Provenance,
    pub states: Vec<BranchState>,
    pub bifurcations: Vec<crate::bifurcation::BifurcationPoint>,
    /// Why continuation stopped early, if it did.
    pub stopped: Option<String>,
}

/// One predictor-corrector step of length ds from `state` along its tangent.
/// Returns the new state (with tangent) and the Newton iteration count.
pub fn step(state: &BranchState, ds: f64, settings: &ContinuationSettings) -> Result<(BranchState, usize), ContinuationError> {
    let frame = Frame::new(state.mesh.clone())?;
    let problem = SteadyProblem::new(&frame, settings.c0, state.area_target, &state.phase());
    let z0 = problem.base_point(state.lambda, &state.multipliers);
    let tau = match &state.tangent {
        Some(t) if t.len() == z0.len() => t.clone(),
        _ => {
            let mut guess = vec![0.0; z0.len()];
            guess[2 * problem.n() + 1] = 1.0;
            problem.tangent(&z0, &guess)?
        }
    };
    let mut z: Vec<f64> = z0.iter().zip(&tau).map(|(a, t)| a + ds * t).collect();
    let (u_row, lambda2_coef) = problem.metric_row(&tau);
    let closure = Closure { u_row, lambda2_coef, target: ds + lambda2_coef * state.lambda.1 };
    let report = problem.solve(&mut z, &closure, settings.tol, settings.max_newton)?;
    let (mut next, frame) = finish_state(&problem, &z, state.kind, settings, state.arclength + ds)?;
    let np = SteadyProblem::new(&frame, settings.c0, state.area_target, &next.phase());
    let z1 = np.base_point(next.lambda, &next.multipliers);
    next.tangent = Some(np.tangent(&z1, &tau)?);
    Ok((next, report.iterations))
}

/// Pseudo-arclength continuation with the area constraint and free volume.
/// `direction` flips the start tangent. Steps are halved on corrector failure
/// and grown after fast convergence; a quality breach triggers adaptation and
/// a re-solve at fixed λ₂.
pub fn continue_branch(
    start: &BranchState,
    direction: f64,
    steps: usize,
    ds: f64,
    settings: &ContinuationSettings,
) -> Result<Branch, ContinuationError> {
    continue_until(start, direction, steps, ds, settings, |_| false)
}

/// As `continue_branch`, stopping after the first state for which `stop` holds.
pub fn continue_until(
    start: &BranchState,
    direction: f64,
    steps: usize,
    ds: f64,
    settings: &ContinuationSettings,
    stop: impl Fn(&BranchState) -> bool,
) -> Result<Branch, ContinuationError> {
    settings.validate()?;
    if !(ds > 0.0) || direction == 0.0 {
        return Err(ContinuationError::Invalid("ds must be positive and direction nonzero".into()));
    }
    let mut first = start.clone();
    if let Some(t) = first.tangent.as_mut() {
        if direction < 0.0 {
            t.iter_mut().for_each(|x| *x = -*x);
        }
    } else {
        first.tangent = None;
        let frame = Frame::new(first.mesh.clone())?;
        let problem = SteadyProblem::new(&frame, settings.c0, first.area_target, &first.phase());
        let z0 = problem.base_point(first.lambda, &first.multipliers);
        let mut guess = vec![0.0; z0.len()];
        guess[2 * problem.n() + 1] = direction.signum();
        first.tangent = Some(problem.tangent(&z0, &guess)?);
    }
    let mut branch = Branch {
        kind: start.kind,
        provenance: Provenance::Seed,
        states: vec![first],
        bifurcations: Vec::new(),
        stopped: None,
    };
    let mut ds = ds.min(settings.ds_max);
    let mut taken = 0;
    // Adaptation cannot always get below q_max; re-adapt only after further decay.
    let mut adapt_above = settings.q_max;
    while taken < steps {
        let cur = branch.states.last().unwrap();
        match step(cur, ds, settings) {
            Ok((mut next, iters)) => {
                if mesh_quality(&next.mesh) > adapt_above {
                    match readapt(&next, settings) {
                        Ok(fixed) => {
                            adapt_above = settings.q_max.max(1.1 * mesh_quality(&fixed.mesh));
                            next = fixed;
                        }
                        Err(e) => {
                            branch.stopped = Some(format!("adaptation failed: {e}"));
                            break;
                        }
                    }
                }
                let done = stop(&next);
                branch.states.push(next);
                taken += 1;
                if done {
                    break;
                }
                if iters <= 3 {
                    ds = (ds * 1.5).min(settings.ds_max);
                }
            }
            Err(ContinuationError::Solver(_)) | Err(ContinuationError::Invalid(_)) => {
                ds *= 0.5;
                if ds < settings.ds_min {
                    branch.stopped = Some(format!("corrector diverged with ds below {:.3e}", settings.ds_min));
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(branch)
}

/// Follows the branch of `start` until λ₂ passes `target`, then lands on
/// `target` with a fixed-λ₂ solve from the last state. The direction is the
/// one in which the start tangent moves λ₂ toward the target.
pub fn continue_to_lambda2(
    start: &BranchState,
    target: f64,
    max_steps: usize,
    ds: f64,
    settings: &ContinuationSettings,
) -> Result<Branch, ContinuationError> {
    let gap = target - start.lambda.1;
    let slope = start.tangent.as_ref().map(|t| t[t.len() - 1 - start.multipliers.len()]).unwrap_or(1.0);
    let direction = if gap * slope < 0.0 { -1.0 } else { 1.0 };
    let passed = |s: &BranchState| (s.lambda.1 - target) * gap.signum() >= 0.0;
    let mut branch = continue_until(start, direction, max_steps, ds, settings, passed)?;
    let last = branch.states.last().unwrap();
    if !passed(last) {
        let why = branch.stopped.clone().unwrap_or_else(|| format!("step budget {max_steps} spent"));
        return Err(ContinuationError::Invalid(format!("λ₂ = {target} not reached at {:.6}: {why}", last.lambda.1)));
    }
    let prev = &branch.states[branch.states.len() - 2];
    let w = (target - prev.lambda.1) / (last.lambda.1 - prev.lambda.1);
    let lambda1 = prev.lambda.0 + w * (last.lambda.0 - prev.lambda.0);
    let mut landed = steady_state(last.mesh.clone(), last.kind, (lambda1, target), Some(last.area_target), settings)?;
    landed.arclength = prev.arclength + w * (last.arclength - prev.arclength);
    *branch.states.last_mut().unwrap() = landed;
    Ok(branch)
}

fn readapt(state: &BranchState, settings: &ContinuationSettings) -> Result<BranchState, ContinuationError> {
    let (mesh, _) = adapt(&state.mesh, &AdaptOptions { q_max: settings.q_max, ..Default::default() })?;
    let sign = state.tangent.as_ref().map(|t| t[t.len() - 1 - state.multipliers.len()].signum()).unwrap_or(1.0);
    // New vertices carry O(1) fourth-order residuals, so allow a longer corrector.
    let relaxed = ContinuationSettings { max_newton: 3 * settings.max_newton, ..*settings };
    let mut fixed = steady_state(mesh, state.kind, state.lambda, Some(state.area_target), &relaxed)?;
    fixed.arclength = state.arclength;
    if sign < 0.0 {
        if let Some(t) = fixed.tangent.as_mut() {
            t.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(fixed)
}
