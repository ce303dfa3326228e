//! Mixed second-order form of the steady-state equations.
//!
//! Unknowns are ordered z = [u | H | border unknowns] with n dofs per field,
//! equations [eq1 | eq2 | border rows]:
//!
//!   eq1 = M·H + ½⟨L·X, N⟩
//!   eq2 = −L·H + M·(2H³ − 2(c₀² + λ₁)H − λ₂) + δ·(2c₀ − 2H)
//!
//! where δ is the angle defect (M·K). The flow M·u̇ = eq2 decreases the
//! energy for the outward displacement u of X = X₀ − u·D.

use faer::sparse::Triplet;
use nalgebra::Vector3;
use tubelab_surface::geometry::{
    area_position_gradient, displacement_directions, lateral_volume, loop_twice_area, volume_position_gradient,
    GeometryFields,
};
use tubelab_surface::{DofMap, SurfaceError, SurfaceMesh};

use crate::error::SolverError;

type V3 = Vector3<f64>;

/// Central-difference step for the u-columns, relative to the mesh radius.
pub const FD_STEP: f64 = 1e-6;

/// Base configuration X₀ with frozen displacement directions D; iterates are X₀ − u·D.
#[derive(Debug, Clone)]
pub struct Frame {
    pub mesh: SurfaceMesh,
    pub dofs: DofMap,
    pub dirs: Vec<V3>,
    /// Left boundary loop, positively oriented in the (y,z) plane.
    pub left: Vec<usize>,
    pub base: GeometryFields,
    /// Closed one-ring of each dof, sorted.
    neighbors: Vec<Vec<usize>>,
    /// Dofs grouped so that no equation depends on two dofs of one group.
    colors: Vec<Vec<usize>>,
}

impl Frame {
    pub fn new(mesh: SurfaceMesh) -> Result<Self, SolverError> {
        mesh.validate()?;
        let dofs = mesh.dofs();
        let dirs = displacement_directions(&mesh)?;
        let left = mesh.left_loop()?;
        let base = GeometryFields::compute(&mesh.vertices, &mesh.triangles, &dofs.dof_of, dofs.len())?;
        let n = dofs.len();
        let mut neighbors: Vec<Vec<usize>> = (0..n).map(|d| vec![d]).collect();
        for tri in &mesh.triangles {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        neighbors[dofs.dof_of[tri[i]]].push(dofs.dof_of[tri[j]]);
                    }
                }
            }
        }
        for nb in neighbors.iter_mut() {
            nb.sort_unstable();
            nb.dedup();
        }
        let colors = distance_two_coloring(&neighbors);
        Ok(Self { mesh, dofs, dirs, left, base, neighbors, colors })
    }

    pub fn n(&self) -> usize {
        self.dofs.len()
    }

    pub fn neighbors(&self, d: usize) -> &[usize] {
        &self.neighbors[d]
    }

    pub fn color_count(&self) -> usize {
        self.colors.len()
    }

    /// Vertex positions X₀ − u·D without the guard check.
    pub fn positions(&self, u: &[f64]) -> Vec<V3> {
        let mut x: Vec<V3> = self
            .mesh
            .vertices
            .iter()
            .zip(&self.dofs.dof_of)
            .map(|(p, &d)| p - u[d] * self.dirs[d])
            .collect();
        for &(l, r) in &self.mesh.periodic_pairs {
            x[r] = x[l] + V3::new(self.mesh.period, 0.0, 0.0);
        }
        x
    }

    /// Guarded displaced mesh.
    pub fn mesh_at(&self, u: &[f64]) -> Result<SurfaceMesh, SolverError> {
        Ok(tubelab_surface::deform::displace_along(&self.mesh, u, &self.dirs)?)
    }

    pub fn fields(&self, x: &[V3]) -> Result<GeometryFields, SurfaceError> {
        GeometryFields::compute(x, &self.mesh.triangles, &self.dofs.dof_of, self.n())
    }

    pub fn volume(&self, x: &[V3]) -> f64 {
        let sign = if self.mesh.inward { 1.0 } else { -1.0 };
        sign * lateral_volume(x, &self.mesh.triangles) + self.mesh.period / 6.0 * loop_twice_area(x, &self.left)
    }

    /// ∂𝒜/∂u and ∂𝒱/∂u at X₀ − u·D.
    pub fn constraint_gradients(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let x = self.positions(u);
        let n = self.n();
        let ga = area_position_gradient(&x, &self.mesh.triangles, &self.dofs.dof_of, n);
        let gv = volume_position_gradient(&x, &self.mesh.triangles, &self.dofs.dof_of, n, &self.left, self.mesh.period);
        let sign = if self.mesh.inward { 1.0 } else { -1.0 };
        let area = ga.iter().zip(&self.dirs).map(|(g, d)| -g.dot(d)).collect();
        let volume = gv.iter().zip(&self.dirs).map(|(g, d)| -sign * g.dot(d)).collect();
        (area, volume)
    }

    /// Rigid-motion generators ⟨e_y,N⟩, ⟨e_z,N⟩, ⟨e_x,N⟩, ⟨e_x×X,N⟩ as normal
    /// displacement fields at the base, in that order.
    pub fn rigid_fields(&self) -> [Vec<f64>; 4] {
        let ex = V3::new(1.0, 0.0, 0.0);
        let mut out: [Vec<f64>; 4] = Default::default();
        for (d, &v) in self.dofs.vertex_of.iter().enumerate() {
            let p = self.mesh.vertices[v];
            let nrm = self.base.normals[d];
            out[0].push(nrm.y);
            out[1].push(nrm.z);
            out[2].push(nrm.x);
            out[3].push(ex.cross(&p).dot(&nrm));
        }
        out
    }
}

fn distance_two_coloring(neighbors: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = neighbors.len();
    let mut color = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut taken: Vec<usize> = Vec::new();
    for j in 0..n {
        taken.clear();
        for &a in &neighbors[j] {
            for &b in &neighbors[a] {
                if color[b] != usize::MAX {
                    taken.push(color[b]);
                }
            }
        }
        taken.sort_unstable();
        taken.dedup();
        let c = (0..).find(|c| taken.binary_search(c).is_err()).unwrap();
        if c == groups.len() {
            groups.push(Vec::new());
        }
        groups[c].push(j);
        color[j] = c;
    }
    groups
}

/// Physical parameters entering the equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub c0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

pub fn equations(g: &GeometryFields, frame: &Frame, h: &[f64], p: &Coefficients) -> (Vec<f64>, Vec<f64>) {
    let n = frame.n();
    let mut lh = vec![0.0; n];
    g.apply_laplacian(&frame.mesh.triangles, &frame.dofs.dof_of, h, &mut lh);
    let defect = g.angle_defect();
    let s = p.c0 * p.c0 + p.lambda1;
    let mut eq1 = Vec::with_capacity(n);
    let mut eq2 = Vec::with_capacity(n);
    for i in 0..n {
        eq1.push(g.mass[i] * h[i] + 0.5 * g.lx[i].dot(&g.normals[i]));
        let hi = h[i];
        eq2.push(-lh[i] + g.mass[i] * (2.0 * hi * hi * hi - 2.0 * s * hi - p.lambda2) + defect[i] * (2.0 * p.c0 - 2.0 * hi));
    }
    (eq1, eq2)
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub eq1: Vec<f64>,
    pub eq2: Vec<f64>,
    pub area: f64,
    pub volume: f64,
    pub fields: GeometryFields,
}

pub fn evaluate(frame: &Frame, u: &[f64], h: &[f64], p: &Coefficients) -> Result<Evaluation, SolverError> {
    let x = frame.positions(u);
    let fields = frame.fields(&x)?;
    let (eq1, eq2) = equations(&fields, frame, h, p);
    Ok(Evaluation { eq1, eq2, area: fields.area, volume: frame.volume(&x), fields })
}

/// Triplets of ∂(eq1, eq2)/∂(u, H). The u-columns are central differences
/// taken one color group at a time; the H-columns are exact.
pub fn jacobian(frame: &Frame, u: &[f64], h: &[f64], p: &Coefficients) -> Result<Vec<Triplet<usize, usize, f64>>, SolverError> {
    let n = frame.n();
    let eps = FD_STEP * frame.mesh.radius;
    let mut trip = Vec::with_capacity(n * 40);
    let mut up = u.to_vec();
    let mut um = u.to_vec();
    for group in &frame.colors {
        for &j in group {
            up[j] = u[j] + eps;
            um[j] = u[j] - eps;
        }
        let gp = frame.fields(&frame.positions(&up))?;
        let gm = frame.fields(&frame.positions(&um))?;
        let (p1, p2) = equations(&gp, frame, h, p);
        let (m1, m2) = equations(&gm, frame, h, p);
        for &j in group {
            for &i in &frame.neighbors[j] {
                trip.push(Triplet::new(i, j, (p1[i] - m1[i]) / (2.0 * eps)));
                trip.push(Triplet::new(n + i, j, (p2[i] - m2[i]) / (2.0 * eps)));
            }
            up[j] = u[j];
            um[j] = u[j];
        }
    }
    let g = frame.fields(&frame.positions(u))?;
    let defect = g.angle_defect();
    let s = p.c0 * p.c0 + p.lambda1;
    for i in 0..n {
        trip.push(Triplet::new(i, n + i, g.mass[i]));
        trip.push(Triplet::new(n + i, n + i, g.mass[i] * (6.0 * h[i] * h[i] - 2.0 * s) - 2.0 * defect[i]));
    }
    for (i, j, v) in g.laplacian_triplets(&frame.mesh.triangles, &frame.dofs.dof_of) {
        trip.push(Triplet::new(n + i, n + j, -v));
    }
    Ok(trip)
}

/// ∂eq2/∂λ₁ and ∂eq2/∂λ₂ as length-2n columns (zero on the eq1 rows).
pub fn lambda_columns(g: &GeometryFields, h: &[f64]) -> [Vec<f64>; 2] {
    let n = h.len();
    let mut c1 = vec![0.0; 2 * n];
    let mut c2 = vec![0.0; 2 * n];
    for i in 0..n {
        c1[n + i] = -2.0 * g.mass[i] * h[i];
        c2[n + i] = -g.mass[i];
    }
    [c1, c2]
}

/// Places a per-dof u-field into a length-2n vector (zero H part).
pub fn pad_u(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(2 * v.len(), 0.0);
    out
}

/// Angle between two vectors, folded into [0, π/2].
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot.abs() / (na * nb)).min(1.0).acos()
}

/// Residual of the steady equations with H taken from the geometry, so that
/// only the fourth-order equation remains. Constraint residuals 𝒜 − 𝒜₀ and
/// 𝒱 − 𝒱₀ are returned for the targets given.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub pde: Vec<f64>,
    pub constraints: Vec<f64>,
}

pub fn residual(
    mesh: &SurfaceMesh,
    lambda: (f64, f64),
    c0: f64,
    area_target: Option<f64>,
    volume_target: Option<f64>,
) -> Result<Residual, SolverError> {
    let frame = Frame::new(mesh.clone())?;
    let h = frame.base.mean_curvature();
    let u = vec![0.0; frame.n()];
    let p = Coefficients { c0, lambda1: lambda.0, lambda2: lambda.1 };
    let ev = evaluate(&frame, &u, &h, &p)?;
    let mut constraints = Vec::new();
    if let Some(a0) = area_target {
        constraints.push(ev.area - a0);
    }
    if let Some(v0) = volume_target {
        constraints.push(ev.volume - v0);
    }
    Ok(Residual { pde: ev.eq2, constraints })
}
