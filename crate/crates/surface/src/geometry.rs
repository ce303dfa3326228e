//! Discrete operators on the periodic tube. All per-vertex quantities are
//! accumulated onto degrees of freedom, so paired boundary vertices see the
//! triangles on both sides of the seam.

use faer::sparse::{SparseColMat, Triplet};
use nalgebra::Vector3;
use std::f64::consts::PI;

use crate::error::SurfaceError;
use crate::mesh::SurfaceMesh;

type V3 = Vector3<f64>;

/// Per-dof and per-triangle quantities from one pass over the triangles.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    /// Mixed Voronoi mass.
    pub mass: Vec<f64>,
    /// Unit area-weighted vertex normals (inward on an inward mesh).
    pub normals: Vec<V3>,
    /// (L X)_i = Σ_j L_ij (X_i − X_j) with the positive semidefinite cotan L.
    pub lx: Vec<V3>,
    pub angle_sum: Vec<f64>,
    /// ½·cot of each corner, i.e. the weight of the opposite edge.
    pub weights: Vec<[f64; 3]>,
    pub triangle_areas: Vec<f64>,
    pub area: f64,
}

impl GeometryFields {
    pub fn compute(
        vertices: &[V3],
        triangles: &[[usize; 3]],
        dof_of: &[usize],
        n_dofs: usize,
    ) -> Result<Self, SurfaceError> {
        let mut g = GeometryFields {
            mass: vec![0.0; n_dofs],
            normals: vec![V3::zeros(); n_dofs],
            lx: vec![V3::zeros(); n_dofs],
            angle_sum: vec![0.0; n_dofs],
            weights: Vec::with_capacity(triangles.len()),
            triangle_areas: Vec::with_capacity(triangles.len()),
            area: 0.0,
        };
        for tri in triangles {
            let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let d = [dof_of[tri[0]], dof_of[tri[1]], dof_of[tri[2]]];
            let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let twice_area = n.norm();
            if !(twice_area > 0.0) {
                return Err(SurfaceError::Degenerate("zero-area triangle"));
            }
            let area = 0.5 * twice_area;
            let mut w = [0.0; 3];
            let mut obtuse = false;
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                let e1 = p[j] - p[i];
                let e2 = p[k] - p[i];
                let dot = e1.dot(&e2);
                w[i] = 0.5 * dot / twice_area;
                obtuse |= dot < 0.0;
                g.angle_sum[d[i]] += twice_area.atan2(dot);
            }
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                // Edge (j,k) opposite corner i.
                let e = p[j] - p[k];
                g.lx[d[j]] += w[i] * e;
                g.lx[d[k]] -= w[i] * e;
                g.normals[d[i]] += n;
            }
            if obtuse {
                for &di in &d {
                    g.mass[di] += area / 3.0;
                }
            } else {
                for i in 0..3 {
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    // Corner i gets ⅛(|ij|² cot k + |ik|² cot j).
                    let lij = (p[j] - p[i]).norm_squared();
                    let lik = (p[k] - p[i]).norm_squared();
                    g.mass[d[i]] += 0.25 * (lij * w[k] + lik * w[j]);
                }
            }
            g.weights.push(w);
            g.triangle_areas.push(area);
            g.area += area;
        }
        for nrm in g.normals.iter_mut() {
            let len = nrm.norm();
            if !(len > 0.0) {
                return Err(SurfaceError::Degenerate("vanishing vertex normal"));
            }
            *nrm /= len;
        }
        Ok(g)
    }

    pub fn of(mesh: &SurfaceMesh) -> Result<Self, SurfaceError> {
        let dofs = mesh.dofs();
        Self::compute(&mesh.vertices, &mesh.triangles, &dofs.dof_of, dofs.len())
    }

    /// H from M·H = −½⟨LX, N⟩; +1/(2r) on an inward cylinder.
    pub fn mean_curvature(&self) -> Vec<f64> {
        (0..self.mass.len())
            .map(|i| -0.5 * self.lx[i].dot(&self.normals[i]) / self.mass[i])
            .collect()
    }

    /// Angle defect over mixed area.
    pub fn gauss_curvature(&self) -> Vec<f64> {
        (0..self.mass.len())
            .map(|i| (2.0 * PI - self.angle_sum[i]) / self.mass[i])
            .collect()
    }

    pub fn angle_defect(&self) -> Vec<f64> {
        self.angle_sum.iter().map(|s| 2.0 * PI - s).collect()
    }

    /// out = L·f for a per-dof field.
    pub fn apply_laplacian(&self, triangles: &[[usize; 3]], dof_of: &[usize], f: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (tri, w) in triangles.iter().zip(&self.weights) {
            for i in 0..3 {
                let dj = dof_of[tri[(i + 1) % 3]];
                let dk = dof_of[tri[(i + 2) % 3]];
                let diff = w[i] * (f[dj] - f[dk]);
                out[dj] += diff;
                out[dk] -= diff;
            }
        }
    }

    /// (row, col, value) entries of the cotan matrix, duplicates summed by the consumer.
    pub fn laplacian_triplets(&self, triangles: &[[usize; 3]], dof_of: &[usize]) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(triangles.len() * 12);
        for (tri, w) in triangles.iter().zip(&self.weights) {
            for i in 0..3 {
                let dj = dof_of[tri[(i + 1) % 3]];
                let dk = dof_of[tri[(i + 2) % 3]];
                t.push((dj, dj, w[i]));
                t.push((dk, dk, w[i]));
                t.push((dj, dk, -w[i]));
                t.push((dk, dj, -w[i]));
            }
        }
        t
    }
}

/// Lateral part −⅙ Σ det(a,b,c) of the enclosed volume for inward triangles.
pub fn lateral_volume(vertices: &[V3], triangles: &[[usize; 3]]) -> f64 {
    let mut v = 0.0;
    for tri in triangles {
        let (a, b, c) = (vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        v -= a.dot(&b.cross(&c));
    }
    v / 6.0
}

/// Twice the (y,z) area enclosed by a positively ordered loop.
pub fn loop_twice_area(vertices: &[V3], lp: &[usize]) -> f64 {
    let mut s = 0.0;
    for i in 0..lp.len() {
        let (p, q) = (vertices[lp[i]], vertices[lp[(i + 1) % lp.len()]]);
        s += p.y * q.z - q.y * p.z;
    }
    s
}

/// Enclosed volume: lateral part plus the two cones over the end caps.
pub fn enclosed_volume(vertices: &[V3], triangles: &[[usize; 3]], left: &[usize], period: f64) -> f64 {
    lateral_volume(vertices, triangles) + period / 6.0 * loop_twice_area(vertices, left)
}

/// ∂𝒜/∂X per dof.
pub fn area_position_gradient(vertices: &[V3], triangles: &[[usize; 3]], dof_of: &[usize], n_dofs: usize) -> Vec<V3> {
    let mut g = vec![V3::zeros(); n_dofs];
    for tri in triangles {
        let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
        let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let nh = n / n.norm();
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            g[dof_of[tri[i]]] += 0.5 * (p[j] - p[k]).cross(&nh);
        }
    }
    g
}

/// ∂𝒱/∂X per dof, including the cap term on the left loop.
pub fn volume_position_gradient(
    vertices: &[V3],
    triangles: &[[usize; 3]],
    dof_of: &[usize],
    n_dofs: usize,
    left: &[usize],
    period: f64,
) -> Vec<V3> {
    let mut g = vec![V3::zeros(); n_dofs];
    for tri in triangles {
        let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            g[dof_of[tri[i]]] -= p[j].cross(&p[k]) / 6.0;
        }
    }
    let m = left.len();
    for i in 0..m {
        let prev = vertices[left[(i + m - 1) % m]];
        let next = vertices[left[(i + 1) % m]];
        g[dof_of[left[i]]] += period / 6.0 * V3::new(0.0, next.z - prev.z, prev.y - next.y);
    }
    g
}

/// Cotan Laplacian on the dofs as a sparse symmetric matrix.
pub fn cotan_laplacian(mesh: &SurfaceMesh) -> Result<SparseColMat<usize, f64>, SurfaceError> {
    let dofs = mesh.dofs();
    let g = GeometryFields::of(mesh)?;
    let trip: Vec<_> = g
        .laplacian_triplets(&mesh.triangles, &dofs.dof_of)
        .into_iter()
        .map(|(i, j, v)| Triplet::new(i, j, v))
        .collect();
    SparseColMat::try_new_from_triplets(dofs.len(), dofs.len(), &trip)
        .map_err(|_| SurfaceError::Degenerate("sparse assembly failed"))
}

pub fn voronoi_mass(mesh: &SurfaceMesh) -> Result<Vec<f64>, SurfaceError> {
    Ok(GeometryFields::of(mesh)?.mass)
}

pub fn vertex_normals(mesh: &SurfaceMesh) -> Result<Vec<V3>, SurfaceError> {
    Ok(GeometryFields::of(mesh)?.normals)
}

pub fn mean_curvature(mesh: &SurfaceMesh) -> Result<Vec<f64>, SurfaceError> {
    Ok(GeometryFields::of(mesh)?.mean_curvature())
}

pub fn gauss_curvature(mesh: &SurfaceMesh) -> Result<Vec<f64>, SurfaceError> {
    Ok(GeometryFields::of(mesh)?.gauss_curvature())
}

pub fn area(mesh: &SurfaceMesh) -> f64 {
    (0..mesh.triangles.len()).map(|t| mesh.triangle_area(t)).sum()
}

pub fn volume(mesh: &SurfaceMesh) -> Result<f64, SurfaceError> {
    let left = mesh.left_loop()?;
    let sign = if mesh.inward { 1.0 } else { -1.0 };
    Ok(sign * lateral_volume(&mesh.vertices, &mesh.triangles)
        + mesh.period / 6.0 * loop_twice_area(&mesh.vertices, &left))
}

/// Directions along which dofs move: vertex normals, with the x-component
/// dropped on the periodic boundary so the end loops stay planar.
pub fn displacement_directions(mesh: &SurfaceMesh) -> Result<Vec<V3>, SurfaceError> {
    let dofs = mesh.dofs();
    let mut n = vertex_normals(mesh)?;
    for (d, dir) in n.iter_mut().enumerate() {
        if dofs.on_boundary[d] {
            dir.x = 0.0;
            let len = dir.norm();
            if !(len > 0.0) {
                return Err(SurfaceError::Degenerate("boundary normal parallel to the axis"));
            }
            *dir /= len;
        }
    }
    Ok(n)
}

/// Kernel g with ⟨∂𝒜, v⟩ = Σ g_i v_i for the displacement X − vD.
pub fn area_gradient(mesh: &SurfaceMesh) -> Result<Vec<f64>, SurfaceError> {
    let dofs = mesh.dofs();
    let dirs = displacement_directions(mesh)?;
    let g = area_position_gradient(&mesh.vertices, &mesh.triangles, &dofs.dof_of, dofs.len());
    Ok(g.iter().zip(&dirs).map(|(g, d)| -g.dot(d)).collect())
}

/// Kernel g with ⟨∂𝒱, v⟩ = Σ g_i v_i for the displacement X − vD.
pub fn volume_gradient(mesh: &SurfaceMesh) -> Result<Vec<f64>, SurfaceError> {
    let dofs = mesh.dofs();
    let dirs = displacement_directions(mesh)?;
    let left = mesh.left_loop()?;
    let g = volume_position_gradient(&mesh.vertices, &mesh.triangles, &dofs.dof_of, dofs.len(), &left, mesh.period);
    let sign = if mesh.inward { 1.0 } else { -1.0 };
    Ok(g.iter().zip(&dirs).map(|(g, d)| -sign * g.dot(d)).collect())
}

/// (E, E/𝒜) with E = Σ M_i (H_i − c₀)².
pub fn helfrich_energy(mesh: &SurfaceMesh, c0: f64) -> Result<(f64, f64), SurfaceError> {
    let g = GeometryFields::of(mesh)?;
    let e = energy_from(&g, c0);
    Ok((e, e / g.area))
}

pub fn energy_from(g: &GeometryFields, c0: f64) -> f64 {
    g.mean_curvature()
        .iter()
        .zip(&g.mass)
        .map(|(h, m)| m * (h - c0) * (h - c0))
        .sum()
}

/// 𝒱 over the volume 𝒜²/(4πL) of the straight cylinder with equal area and period.
pub fn reduced_volume(mesh: &SurfaceMesh) -> Result<f64, SurfaceError> {
    let a = area(mesh);
    Ok(volume(mesh)? / (a * a / (4.0 * PI * mesh.period)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryReport {
    pub area: f64,
    pub volume: f64,
    pub energy: f64,
    pub normalized_energy: f64,
    pub reduced_volume: f64,
    pub mesh_quality: f64,
}

pub fn geometry_report(mesh: &SurfaceMesh, c0: f64) -> Result<GeometryReport, SurfaceError> {
    let g = GeometryFields::of(mesh)?;
    let vol = volume(mesh)?;
    let energy = energy_from(&g, c0);
    Ok(GeometryReport {
        area: g.area,
        volume: vol,
        energy,
        normalized_energy: energy / g.area,
        reduced_volume: vol / (g.area * g.area / (4.0 * PI * mesh.period)),
        mesh_quality: crate::adapt::mesh_quality(mesh),
    })
}
