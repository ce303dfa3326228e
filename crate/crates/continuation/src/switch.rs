use std::f64::consts::PI;
use tubelab_solver::mixed::Frame;
use tubelab_surface::deform::{displace, project_amplitude};
use tubelab_surface::SurfaceMesh;

use crate::bifurcation::BifurcationPoint;
use crate::branch::{finish_state, BranchState, ContinuationSettings};
use crate::error::ContinuationError;
use crate::phase::{BranchKind, PhaseConditions};
use crate::steady::{Closure, SteadyProblem};

/// A switch whose corrected amplitude is below this fraction of the
/// predicted one has fallen back onto the trivial branch.
pub const FALLBACK_FRACTION: f64 = 0.1;

/// Mode (m, n) that a branch of the given kind bifurcating at `bp` carries.
pub fn branch_mode(kind: BranchKind, bp: &BifurcationPoint) -> Result<(i32, i32), ContinuationError> {
    let (m, n) = (bp.mode_m, bp.mode_n);
    let ok = match kind {
        BranchKind::Pearling => m != 0 && n == 0,
        BranchKind::Wrinkling => m == 0 && n != 0,
        BranchKind::Coiling | BranchKind::Buckling => m != 0 && n != 0,
        BranchKind::Generic => m != 0 || n != 0,
        BranchKind::Trivial => false,
    };
    if ok {
        Ok((m, n))
    } else {
        Err(ContinuationError::Invalid(format!("{kind:?} ansatz does not fit mode ({m}, {n})")))
    }
}

/// Radial ansatz per dof: cos kx, cos nφ, cos(kx + nφ), or cos kx·cos nφ for
/// the equal-amplitude buckling combination.
pub fn ansatz_field(mesh: &SurfaceMesh, kind: BranchKind, m: i32, n: i32) -> Vec<f64> {
    let k = 2.0 * PI * m as f64 / mesh.period;
    let n = n as f64;
    let dofs = mesh.dofs();
    dofs.vertex_of
        .iter()
        .map(|&v| {
            let p = mesh.vertices[v];
            let phi = p.z.atan2(p.y);
            match kind {
                BranchKind::Buckling => (k * p.x).cos() * (n * phi).cos(),
                _ => (k * p.x + n * phi).cos(),
            }
        })
        .collect()
}

/// Seeds a bifurcating branch: the state at `bp` displaced by ε times the
/// ansatz, then corrected with the projection onto the ansatz held fixed.
/// The returned state carries a tangent pointing to growing amplitude.
pub fn switch_branch(
    bp: &BifurcationPoint,
    kind: BranchKind,
    epsilon: f64,
    settings: &ContinuationSettings,
) -> Result<BranchState, ContinuationError> {
    if epsilon == 0.0 || !epsilon.is_finite() {
        return Err(ContinuationError::Invalid("switching needs a nonzero amplitude".into()));
    }
    if !matches!(bp.multiplicity, 2 | 4) && kind != BranchKind::Generic {
        return Err(ContinuationError::Invalid(format!("kernel multiplicity {} is neither 2 nor 4", bp.multiplicity)));
    }
    let base = bp.state.as_ref().ok_or_else(|| ContinuationError::Invalid("bifurcation point carries no state".into()))?;
    let (m, n) = branch_mode(kind, bp)?;
    let settings = ContinuationSettings { track_mode: (m, n), ..*settings };

    let field = ansatz_field(&base.mesh, kind, m, n);
    let u: Vec<f64> = field.iter().map(|f| epsilon * f).collect();
    let predicted = displace(&base.mesh, &u)?;
    let predicted_amp = project_amplitude(&predicted, m, n)?.norm();

    let frame = Frame::new(predicted.clone())?;
    let problem = SteadyProblem::new(&frame, settings.c0, base.area_target, &PhaseConditions::for_kind(kind));
    let mut z = problem.base_point((bp.lambda1, bp.lambda2), &[]);
    let f = ansatz_field(&predicted, kind, m, n);
    let closure = Closure { u_row: f.iter().zip(&frame.base.mass).map(|(a, w)| a * w / problem.metric_area).collect(), lambda2_coef: 0.0, target: 0.0 };
    problem.solve(&mut z, &closure, settings.tol, settings.max_newton)?;
    let (mut state, frame) = finish_state(&problem, &z, kind, &settings, 0.0)?;
    let amp = state.amplitude.norm();
    if amp < FALLBACK_FRACTION * predicted_amp {
        return Err(ContinuationError::TrivialFallback { amplitude: amp });
    }

    let next = SteadyProblem::new(&frame, settings.c0, base.area_target, &state.phase());
    let z0 = next.base_point(state.lambda, &state.multipliers);
    let mut guess = vec![0.0; next.dim()];
    let g = ansatz_field(&state.mesh, kind, m, n);
    guess[..g.len()].iter_mut().zip(&g).for_each(|(x, y)| *x = epsilon.signum() * y);
    state.tangent = Some(next.tangent(&z0, &guess)?);
    Ok(state)
}
