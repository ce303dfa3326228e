use nalgebra::Vector3;
use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::SurfaceError;

/// Periodic triangulated tube along the x axis.
///
/// The right boundary loop duplicates the left one shifted by (L,0,0); each
/// pair shares one degree of freedom. Scalar fields are stored per degree of
/// freedom, in vertex order with right-boundary copies skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    /// (left, right) with vertices[right] = vertices[left] + (L, 0, 0).
    pub periodic_pairs: Vec<(usize, usize)>,
    /// Triangle orientation yields normals pointing toward the axis.
    pub inward: bool,
    pub period: f64,
    /// Radius of the cylinder the mesh was built on.
    pub radius: f64,
    /// Mean triangle area at creation; drives the refinement threshold.
    pub reference_area: f64,
}

/// Vertex ↔ degree-of-freedom map induced by the periodic pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub dof_of: Vec<usize>,
    /// Representative (left or interior) vertex of each dof.
    pub vertex_of: Vec<usize>,
    pub on_boundary: Vec<bool>,
}

impl DofMap {
    pub fn len(&self) -> usize {
        self.vertex_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_of.is_empty()
    }

    /// Expands a per-dof field to one value per vertex.
    pub fn to_vertices(&self, field: &[f64]) -> Vec<f64> {
        self.dof_of.iter().map(|&d| field[d]).collect()
    }
}

impl SurfaceMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn dofs(&self) -> DofMap {
        let n = self.vertices.len();
        let mut is_right = vec![false; n];
        let mut partner = vec![usize::MAX; n];
        let mut on_boundary_v = vec![false; n];
        for &(l, r) in &self.periodic_pairs {
            is_right[r] = true;
            partner[r] = l;
            on_boundary_v[l] = true;
        }
        let mut dof_of = vec![usize::MAX; n];
        let mut vertex_of = Vec::with_capacity(n - self.periodic_pairs.len());
        let mut on_boundary = Vec::with_capacity(vertex_of.capacity());
        for v in 0..n {
            if !is_right[v] {
                dof_of[v] = vertex_of.len();
                vertex_of.push(v);
                on_boundary.push(on_boundary_v[v]);
            }
        }
        for v in 0..n {
            if is_right[v] {
                dof_of[v] = dof_of[partner[v]];
            }
        }
        DofMap { dof_of, vertex_of, on_boundary }
    }

    pub fn n_dofs(&self) -> usize {
        self.vertices.len() - self.periodic_pairs.len()
    }

    /// Triangle area and unnormalized normal (b−a)×(c−a).
    pub fn triangle_normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (pb - pa).cross(&(pc - pa))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.triangle_normal(t).norm()
    }

    pub fn mean_triangle_area(&self) -> f64 {
        let total: f64 = (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum();
        total / self.triangles.len() as f64
    }

    /// Undirected edges with the triangles containing them, keyed by sorted vertex pair.
    pub fn edge_triangles(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(self.triangles.len() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        map
    }

    fn directed_edges(&self) -> HashMap<(usize, usize), usize> {
        let mut map = HashMap::with_capacity(self.triangles.len() * 3);
        for (t, tri) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                map.insert((tri[e], tri[(e + 1) % 3]), t);
            }
        }
        map
    }

    /// Left boundary loop (x ≈ min), ordered so that its enclosed (y,z) area is positive.
    pub fn left_loop(&self) -> Result<Vec<usize>, SurfaceError> {
        let dofs = self.dofs();
        let loops = self.boundary_loops()?;
        let mut left = loops
            .into_iter()
            .find(|l| dofs.on_boundary[dofs.dof_of[l[0]]] && dofs.vertex_of[dofs.dof_of[l[0]]] == l[0])
            .ok_or(SurfaceError::Unpaired("no left boundary loop"))?;
        let mut twice_area = 0.0;
        for i in 0..left.len() {
            let (p, q) = (self.vertices[left[i]], self.vertices[left[(i + 1) % left.len()]]);
            twice_area += p.y * q.z - q.y * p.z;
        }
        if twice_area < 0.0 {
            left.reverse();
        }
        Ok(left)
    }

    /// Boundary loops as ordered vertex cycles.
    pub fn boundary_loops(&self) -> Result<Vec<Vec<usize>>, SurfaceError> {
        let directed = self.directed_edges();
        let mut next: HashMap<usize, usize> = HashMap::new();
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) && next.insert(a, b).is_some() {
                return Err(SurfaceError::NonManifold("boundary vertex with two outgoing edges"));
            }
        }
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut seen = std::collections::HashSet::new();
        let mut loops = Vec::new();
        for s in starts {
            if !seen.insert(s) {
                continue;
            }
            let mut cycle = vec![s];
            let mut v = next[&s];
            while v != s {
                if !seen.insert(v) {
                    return Err(SurfaceError::NonManifold("boundary loops intersect"));
                }
                cycle.push(v);
                v = *next.get(&v).ok_or(SurfaceError::NonManifold("open boundary chain"))?;
            }
            loops.push(cycle);
        }
        Ok(loops)
    }

    /// V − E + F of the mesh with periodic pairs identified (a torus gives 0).
    pub fn euler_characteristic(&self) -> i64 {
        let dofs = self.dofs();
        let mut edges = std::collections::HashSet::new();
        for tri in &self.triangles {
            for e in 0..3 {
                let (a, b) = (dofs.dof_of[tri[e]], dofs.dof_of[tri[(e + 1) % 3]]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        dofs.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    /// Checks the structural invariants of a periodic tube mesh.
    pub fn validate(&self) -> Result<(), SurfaceError> {
        let n = self.vertices.len();
        for tri in &self.triangles {
            if tri.iter().any(|&v| v >= n) {
                return Err(SurfaceError::InvalidIndex);
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(SurfaceError::Degenerate("repeated vertex in triangle"));
            }
        }
        for t in 0..self.triangles.len() {
            if !(self.triangle_area(t) > 0.0) {
                return Err(SurfaceError::Degenerate("zero-area triangle"));
            }
        }
        let directed = self.directed_edges();
        if directed.len() != 3 * self.triangles.len() {
            return Err(SurfaceError::NonManifold("inconsistent orientation or duplicated edge"));
        }
        let loops = self.boundary_loops()?;
        if loops.len() != 2 {
            return Err(SurfaceError::NonManifold("expected exactly two boundary loops"));
        }
        let mut lefts = vec![false; n];
        let mut rights = vec![false; n];
        for &(l, r) in &self.periodic_pairs {
            if l >= n || r >= n {
                return Err(SurfaceError::InvalidIndex);
            }
            if lefts[l] || rights[r] || rights[l] || lefts[r] {
                return Err(SurfaceError::Unpaired("periodic pairing is not bijective"));
            }
            lefts[l] = true;
            rights[r] = true;
            let d = self.vertices[r] - self.vertices[l];
            let tol = 1e-9 * (1.0 + self.period);
            if (d.x - self.period).abs() > tol || d.y.abs() > tol || d.z.abs() > tol {
                return Err(SurfaceError::Unpaired("paired vertices are not offset by (L,0,0)"));
            }
        }
        let boundary: usize = loops.iter().map(|l| l.len()).sum();
        if boundary != 2 * self.periodic_pairs.len() {
            return Err(SurfaceError::Unpaired("boundary vertices without partner"));
        }
        for l in &loops {
            let first_left = lefts[l[0]];
            if l.iter().any(|&v| lefts[v] != first_left || (!lefts[v] && !rights[v])) {
                return Err(SurfaceError::Unpaired("boundary loop mixes left and right vertices"));
            }
        }
        Ok(())
    }
}

/// Unit outward radial direction (0, cosφ, sinφ) of a point.
pub fn radial(p: &Vector3<f64>) -> Vector3<f64> {
    let rho = (p.y * p.y + p.z * p.z).sqrt();
    Vector3::new(0.0, p.y / rho, p.z / rho)
}

/// Structured tube with alternate columns shifted by half an azimuthal step.
/// `nx` is the number of axial columns (even), `nphi` the nodes per column.
pub fn cylinder_grid(l: f64, r: f64, nx: usize, nphi: usize) -> Result<SurfaceMesh, SurfaceError> {
    if nphi < 3 {
        return Err(SurfaceError::TooCoarse(nphi));
    }
    if nx < 2 || nx % 2 != 0 {
        return Err(SurfaceError::Degenerate("axial column count must be even and at least 2"));
    }
    let dphi = 2.0 * PI / nphi as f64;
    let hx = l / nx as f64;
    let idx = |j: usize, i: usize| j * nphi + (i % nphi);
    let mut vertices = Vec::with_capacity((nx + 1) * nphi);
    for j in 0..=nx {
        let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..nphi {
            let phi = (i as f64 + shift) * dphi;
            vertices.push(Vector3::new(j as f64 * hx, r * phi.cos(), r * phi.sin()));
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * nphi);
    for j in 0..nx {
        for i in 0..nphi {
            let (a0, a1) = (idx(j, i), idx(j, i + 1));
            let (b0, b1) = (idx(j + 1, i), idx(j + 1, i + 1));
            if j % 2 == 0 {
                triangles.push([a0, b0, a1]);
                triangles.push([a1, b0, b1]);
            } else {
                triangles.push([a0, b0, b1]);
                triangles.push([a0, b1, a1]);
            }
        }
    }
    // Orient every triangle so that its normal points toward the axis.
    for tri in triangles.iter_mut() {
        let (pa, pb, pc) = (vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        let n = (pb - pa).cross(&(pc - pa));
        let centroid = (pa + pb + pc) / 3.0;
        if n.dot(&radial(&centroid)) > 0.0 {
            tri.swap(1, 2);
        }
    }
    let periodic_pairs = (0..nphi).map(|i| (idx(0, i), idx(nx, i))).collect();
    // The right column must equal the left one shifted by L exactly.
    for i in 0..nphi {
        let left = vertices[idx(0, i)];
        vertices[idx(nx, i)] = Vector3::new(left.x + l, left.y, left.z);
    }
    let mut mesh = SurfaceMesh {
        vertices,
        triangles,
        periodic_pairs,
        inward: true,
        period: l,
        radius: r,
        reference_area: 0.0,
    };
    mesh.reference_area = mesh.mean_triangle_area();
    Ok(mesh)
}

/// Structured tube with about `target_nodes` degrees of freedom and grid
/// counts chosen to minimize the mesh-quality quotient.
pub fn build_cylinder_mesh(l: f64, r: f64, target_nodes: usize) -> Result<SurfaceMesh, SurfaceError> {
    if !(l > 0.0) || !(r > 0.0) {
        return Err(SurfaceError::Degenerate("L and r must be positive"));
    }
    if target_nodes < 64 {
        return Err(SurfaceError::TooCoarse(target_nodes));
    }
    let target = target_nodes as f64;
    let mut best: Option<(f64, f64, usize, usize)> = None;
    let max_phi = (target / 2.0).sqrt().ceil() as usize * 4;
    for nphi in 3..=max_phi.max(3) {
        let nx_ideal = target / nphi as f64;
        let base = ((nx_ideal / 2.0).round() as usize).max(1) * 2;
        for nx in [base.saturating_sub(2).max(2), base, base + 2] {
            let nodes = (nx * nphi) as f64;
            if (nodes - target).abs() > 0.1 * target {
                continue;
            }
            let q = grid_quality(l, r, nx, nphi);
            let off = (nodes - target).abs();
            let better = match best {
                None => true,
                Some((bq, boff, _, _)) => q < bq - 1e-12 || ((q - bq).abs() <= 1e-12 && off < boff),
            };
            if better {
                best = Some((q, off, nx, nphi));
            }
        }
    }
    let (_, _, nx, nphi) = best.ok_or(SurfaceError::TooCoarse(target_nodes))?;
    cylinder_grid(l, r, nx, nphi)
}

// Quality of the two congruent triangle shapes of the shifted grid.
fn grid_quality(l: f64, r: f64, nx: usize, nphi: usize) -> f64 {
    let dphi = 2.0 * PI / nphi as f64;
    let hx = l / nx as f64;
    let p = |x: f64, phi: f64| Vector3::new(x, r * phi.cos(), r * phi.sin());
    let a0 = p(0.0, 0.0);
    let a1 = p(0.0, dphi);
    let b0 = p(hx, 0.5 * dphi);
    let b1 = p(hx, 1.5 * dphi);
    triangle_quality(&a0, &b0, &a1).max(triangle_quality(&a1, &b0, &b1))
}

/// e_max(e₁+e₂+e₃)/(2|T|); equals 2√3 for an equilateral triangle.
pub fn triangle_quality(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let e = [(b - a).norm(), (c - b).norm(), (a - c).norm()];
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    let emax = e[0].max(e[1]).max(e[2]);
    emax * (e[0] + e[1] + e[2]) / (2.0 * area)
}
