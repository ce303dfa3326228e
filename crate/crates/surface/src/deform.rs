use nalgebra::Vector3;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::SurfaceError;
use crate::geometry::{displacement_directions, GeometryFields};
use crate::mesh::SurfaceMesh;

/// Displacements must stay below r − GUARD_FRACTION·r.
pub const GUARD_FRACTION: f64 = 0.05;

/// X − u·D per dof, with D from `displacement_directions`.
pub fn displace(mesh: &SurfaceMesh, u: &[f64]) -> Result<SurfaceMesh, SurfaceError> {
    let dirs = displacement_directions(mesh)?;
    displace_along(mesh, u, &dirs)
}

pub fn displace_along(mesh: &SurfaceMesh, u: &[f64], dirs: &[Vector3<f64>]) -> Result<SurfaceMesh, SurfaceError> {
    let dofs = mesh.dofs();
    if u.len() != dofs.len() {
        return Err(SurfaceError::FieldLength { got: u.len(), expected: dofs.len() });
    }
    let bound = mesh.radius * (1.0 - GUARD_FRACTION);
    if let Some((dof, &value)) = u.iter().enumerate().find(|(_, v)| !(v.abs() < bound)) {
        return Err(SurfaceError::Guard { dof, value, bound });
    }
    let mut out = mesh.clone();
    for (v, x) in out.vertices.iter_mut().enumerate() {
        let d = dofs.dof_of[v];
        *x -= u[d] * dirs[d];
    }
    for &(l, r) in &mesh.periodic_pairs {
        let left = out.vertices[l];
        out.vertices[r] = Vector3::new(left.x + mesh.period, left.y, left.z);
    }
    Ok(out)
}

/// Complex coefficient c of e^{i(kx + nφ)} in the radial deviation ρ − r, so
/// that a deviation ε·cos(kx + nφ) gives c = ε/2. Points are projected onto
/// the cylinder to obtain (x, φ), and the projected Voronoi masses serve as
/// quadrature weights.
pub fn project_amplitude(mesh: &SurfaceMesh, m: i32, n: i32) -> Result<Complex64, SurfaceError> {
    let dofs = mesh.dofs();
    let r = mesh.radius;
    let projected: Vec<Vector3<f64>> = mesh
        .vertices
        .iter()
        .map(|p| {
            let rho = (p.y * p.y + p.z * p.z).sqrt();
            Vector3::new(p.x, r * p.y / rho, r * p.z / rho)
        })
        .collect();
    let g = GeometryFields::compute(&projected, &mesh.triangles, &dofs.dof_of, dofs.len())?;
    let k = 2.0 * PI * m as f64 / mesh.period;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut wsum = 0.0;
    for (d, &v) in dofs.vertex_of.iter().enumerate() {
        let p = mesh.vertices[v];
        let rho = (p.y * p.y + p.z * p.z).sqrt();
        let phi = p.z.atan2(p.y);
        let w = g.mass[d];
        acc += w * (rho - r) * Complex64::from_polar(1.0, -(k * p.x + n as f64 * phi));
        wsum += w;
    }
    Ok(acc / wsum)
}
