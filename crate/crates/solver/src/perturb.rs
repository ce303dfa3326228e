use tubelab_surface::deform::displace_along;
use tubelab_surface::geometry::displacement_directions;
use tubelab_surface::SurfaceMesh;

use crate::error::SolverError;

/// Converts a displacement δ·w along the inner normal into the outward u of X − u·D.
fn along_inner_normal(mesh: &SurfaceMesh, w: &[f64], delta: f64) -> Result<SurfaceMesh, SolverError> {
    let sign = if mesh.inward { 1.0 } else { -1.0 };
    let u: Vec<f64> = w.iter().map(|v| -sign * delta * v).collect();
    let dirs = displacement_directions(mesh)?;
    Ok(displace_along(mesh, &u, &dirs)?)
}

/// X + δ·cos(φ)/(1 + ξx²)·N with N the inner normal and x the signed periodic
/// distance to the seam, so the bump is centred on x = 0 and continuous across it.
pub fn perturb_bump(mesh: &SurfaceMesh, delta: f64, xi: f64) -> Result<SurfaceMesh, SolverError> {
    if !(xi > 0.0) {
        return Err(SolverError::Invalid(format!("bump width parameter must be positive, got {xi}")));
    }
    let dofs = mesh.dofs();
    let w: Vec<f64> = dofs
        .vertex_of
        .iter()
        .map(|&v| {
            let p = mesh.vertices[v];
            let x = p.x - mesh.period * (p.x / mesh.period).round();
            p.z.atan2(p.y).cos() / (1.0 + xi * x * x)
        })
        .collect();
    along_inner_normal(mesh, &w, delta)
}

/// X + δ·ψ·N with ψ the per-dof field scaled to unit sup-norm.
pub fn perturb_eigen(mesh: &SurfaceMesh, direction: &[f64], delta: f64) -> Result<SurfaceMesh, SolverError> {
    let n = mesh.n_dofs();
    if direction.len() != n {
        return Err(SolverError::Invalid(format!("direction has length {}, expected {n}", direction.len())));
    }
    let scale = direction.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) {
        return Err(SolverError::Invalid("direction field vanishes".into()));
    }
    let w: Vec<f64> = direction.iter().map(|v| v / scale).collect();
    along_inner_normal(mesh, &w, delta)
}
