use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use tubelab_surface::SurfaceMesh;

use crate::branch::{constrained_stability, step, Branch, BranchState, ContinuationSettings};
use crate::error::ContinuationError;

/// Localization stops once the bracket is this narrow in λ₂.
pub const LAMBDA2_TOL: f64 = 1e-5;
const MAX_BISECTION: usize = 40;
/// Fourier search range for kernel identification.
const MODE_M_MAX: i32 = 12;
const MODE_N_MAX: i32 = 6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub lambda2: f64,
    pub mode_m: i32,
    pub mode_n: i32,
    pub multiplicity: usize,
    #[serde(skip)]
    pub lambda1: f64,
    #[serde(skip)]
    pub arclength: f64,
    /// Converged state closest to the crossing.
    #[serde(skip)]
    pub state: Option<BranchState>,
    /// u-parts of the eigenvectors whose eigenvalues cross.
    #[serde(skip)]
    pub kernel: Vec<Vec<f64>>,
}

/// Crossing monitor: the eigenvalue that changes sign between counts na and nb.
fn monitor(state: &BranchState, na: usize, nb: usize) -> f64 {
    state.spectrum.get(na.min(nb)).map(|m| m.re).unwrap_or(f64::NEG_INFINITY)
}

/// Localizes every change of n_unstable between consecutive states by
/// Illinois regula falsi in arclength on the crossing eigenvalue.
pub fn detect_bifurcations(branch: &Branch, settings: &ContinuationSettings) -> Result<Vec<BifurcationPoint>, ContinuationError> {
    let settings = ContinuationSettings { stability: true, ..*settings };
    let mut out = Vec::new();
    for pair in branch.states.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.spectrum.is_empty() || b.spectrum.is_empty() {
            return Err(ContinuationError::Invalid("bifurcation detection needs spectra at every state".into()));
        }
        if a.n_unstable != b.n_unstable {
            out.push(localize(a, b, &settings)?);
        }
    }
    Ok(out)
}

fn localize(a: &BranchState, b: &BranchState, settings: &ContinuationSettings) -> Result<BifurcationPoint, ContinuationError> {
    let (na, nb) = (a.n_unstable, b.n_unstable);
    let (mut lo, mut hi) = (0.0, b.arclength - a.arclength);
    let (mut f_lo, mut f_hi) = (monitor(a, na, nb), monitor(b, na, nb));
    let (mut s_lo, mut s_hi) = (a.clone(), b.clone());
    let mut side = 0i8;
    for _ in 0..MAX_BISECTION {
        if (s_hi.lambda.1 - s_lo.lambda.1).abs() <= LAMBDA2_TOL {
            break;
        }
        let mut t = if f_lo.is_finite() && f_hi.is_finite() && f_lo != f_hi { lo + (hi - lo) * f_lo / (f_lo - f_hi) } else { 0.5 * (lo + hi) };
        // Keep the trial strictly inside the bracket.
        let margin = 0.05 * (hi - lo);
        t = t.clamp(lo + margin, hi - margin);
        let (s, _) = step(a, t, settings)?;
        let f = monitor(&s, na, nb);
        if s.n_unstable == na {
            lo = t;
            f_lo = f;
            s_lo = s;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            f_hi = f;
            s_hi = s;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    if (s_hi.lambda.1 - s_lo.lambda.1).abs() > LAMBDA2_TOL {
        return Err(ContinuationError::Bisection { lo: s_lo.lambda.1, hi: s_hi.lambda.1 });
    }
    // Final secant estimate on the crossing eigenvalue between the bracketing states.
    let (m_lo, m_hi) = (monitor(&s_lo, na, nb), monitor(&s_hi, na, nb));
    let w = if m_lo.is_finite() && m_hi.is_finite() && m_lo != m_hi { (m_lo / (m_lo - m_hi)).clamp(0.0, 1.0) } else { 0.5 };
    let lambda2 = s_lo.lambda.1 + w * (s_hi.lambda.1 - s_lo.lambda.1);
    let lambda1 = s_lo.lambda.0 + w * (s_hi.lambda.0 - s_lo.lambda.0);
    let arclength = s_lo.arclength + w * (s_hi.arclength - s_lo.arclength);

    let multiplicity = na.abs_diff(nb);
    let near = if w < 0.5 { s_lo } else { s_hi };
    let st = constrained_stability(&near, settings.c0, settings.n_eigs)?;
    // The crossing eigenvalues are the ones closest to zero.
    let mut order: Vec<usize> = (0..st.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| st.eigenvalues[i].re.abs().total_cmp(&st.eigenvalues[j].re.abs()));
    let kernel: Vec<Vec<f64>> = order.into_iter().take(multiplicity).map(|i| st.vectors[i].clone()).collect();
    let (mode_m, mode_n) = dominant_mode(&near.mesh, &kernel);
    Ok(BifurcationPoint { lambda2, mode_m, mode_n, multiplicity, lambda1, arclength, state: Some(near), kernel })
}

/// Fourier coefficient of a per-dof field on e^{i(kx + nφ)}, averaged over dofs.
pub fn field_coefficient(mesh: &SurfaceMesh, field: &[f64], m: i32, n: i32) -> Complex64 {
    let dofs = mesh.dofs();
    let k = 2.0 * PI * m as f64 / mesh.period;
    let mut acc = Complex64::new(0.0, 0.0);
    for (d, &v) in dofs.vertex_of.iter().enumerate() {
        let p = mesh.vertices[v];
        let phi = p.z.atan2(p.y);
        acc += field[d] * Complex64::from_polar(1.0, -(k * p.x + n as f64 * phi));
    }
    acc / dofs.len() as f64
}

/// (m, n) with n ≥ 0 carrying the most power over the kernel; (m, n) and
/// (m, −n) are lumped since cos/sin and ± pairs share an eigenvalue.
pub fn dominant_mode(mesh: &SurfaceMesh, kernel: &[Vec<f64>]) -> (i32, i32) {
    let mut best = ((0, 0), -1.0);
    for m in 0..=MODE_M_MAX {
        for n in 0..=MODE_N_MAX {
            let power: f64 = kernel
                .iter()
                .map(|f| {
                    let p = field_coefficient(mesh, f, m, n).norm_sqr();
                    if n > 0 {
                        p + field_coefficient(mesh, f, m, -n).norm_sqr()
                    } else {
                        p
                    }
                })
                .sum();
            if power > best.1 * (1.0 + 1e-9) {
                best = ((m, n), power);
            }
        }
    }
    best.0
}
