use nalgebra::Vector3;
use std::collections::{HashMap, HashSet};

use crate::error::SurfaceError;
use crate::mesh::{triangle_quality, SurfaceMesh};

/// Quality quotient of an equilateral triangle, the minimum of `triangle_quality`.
pub const EQUILATERAL_QUALITY: f64 = 3.464_101_615_137_754_6;

/// max over triangles of e_max(e₁+e₂+e₃)/(2|T|).
pub fn mesh_quality(mesh: &SurfaceMesh) -> f64 {
    triangle_qualities(mesh).into_iter().fold(0.0, f64::max)
}

/// `mesh_quality` scaled so that an equilateral mesh scores 1.
pub fn normalized_quality(mesh: &SurfaceMesh) -> f64 {
    mesh_quality(mesh) / EQUILATERAL_QUALITY
}

fn triangle_qualities(mesh: &SurfaceMesh) -> Vec<f64> {
    mesh.triangles
        .iter()
        .map(|t| triangle_quality(&mesh.vertices[t[0]], &mesh.vertices[t[1]], &mesh.vertices[t[2]]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptOptions {
    pub refine_factor: f64,
    pub q_max: f64,
    pub area_floor_factor: f64,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        Self { refine_factor: 1.3, q_max: 8.0, area_floor_factor: 1.0 / 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdaptReport {
    pub refined: usize,
    pub collapsed: usize,
    pub flipped: usize,
    pub quality_before: f64,
    pub quality_after: f64,
}

impl AdaptReport {
    pub fn changed(&self) -> bool {
        self.refined + self.collapsed + self.flipped > 0
    }
}

/// Refines oversized triangles (mirrored across the periodic seam) and, when
/// the quality quotient exceeds `q_max`, collapses or flips small bad
/// triangles. Topology changes are rolled back with an error.
pub fn adapt(mesh: &SurfaceMesh, opts: &AdaptOptions) -> Result<(SurfaceMesh, AdaptReport), SurfaceError> {
    let chi = mesh.euler_characteristic();
    let loops = mesh.boundary_loops()?.len();
    let mut out = mesh.clone();
    let mut report = AdaptReport { quality_before: mesh_quality(mesh), ..Default::default() };
    report.refined = refine(&mut out, opts.refine_factor * mesh.reference_area);
    if mesh_quality(&out) > opts.q_max {
        let (c, f) = coarsen(&mut out, opts);
        report.collapsed = c;
        report.flipped = f;
    }
    let check = out
        .validate()
        .and_then(|_| out.boundary_loops().map(|l| l.len()))
        .map_err(|e| e.to_string())
        .and_then(|l| {
            if l != loops {
                Err(format!("boundary loop count changed from {loops} to {l}"))
            } else if out.euler_characteristic() != chi {
                Err(format!("Euler characteristic changed from {chi} to {}", out.euler_characteristic()))
            } else {
                Ok(())
            }
        });
    if let Err(reason) = check {
        return Err(SurfaceError::RolledBack(reason));
    }
    report.quality_after = mesh_quality(&out);
    Ok((out, report))
}

/// Unit area-weighted vertex normals; seam partners share theirs.
fn vertex_normals(mesh: &SurfaceMesh) -> Vec<Vector3<f64>> {
    let mut n = vec![Vector3::zeros(); mesh.vertices.len()];
    for tri in &mesh.triangles {
        let w = normal_of(mesh, *tri);
        tri.iter().for_each(|&v| n[v] += w);
    }
    for &(l, r) in &mesh.periodic_pairs {
        let s = n[l] + n[r];
        (n[l], n[r]) = (s, s);
    }
    n.iter().map(|v| v.try_normalize(0.0).unwrap_or_else(Vector3::zeros)).collect()
}

/// Midpoint of the cubic Hermite curve whose end tangents are the edge
/// projected into each tangent plane. Lies on a circular arc to O(h⁴), so
/// new vertices do not dent curved regions.
fn curved_midpoint(p0: Vector3<f64>, p1: Vector3<f64>, n0: Vector3<f64>, n1: Vector3<f64>) -> Vector3<f64> {
    let e = p1 - p0;
    0.5 * (p0 + p1) + (e.dot(&n1) * n1 - e.dot(&n0) * n0) / 8.0
}

fn sorted(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Longest-edge bisection of triangles above `threshold`. Each pass splits
/// disjoint sets of triangles; a seam edge is split together with its partner.
fn refine(mesh: &mut SurfaceMesh, threshold: f64) -> usize {
    let mut splits_done = 0;
    for _pass in 0..32 {
        let edge_tris = mesh.edge_triangles();
        let normals = vertex_normals(mesh);
        let partner: HashMap<usize, usize> = mesh
            .periodic_pairs
            .iter()
            .flat_map(|&(l, r)| [(l, r), (r, l)])
            .collect();
        let mut marked: Vec<(usize, f64)> = (0..mesh.triangles.len())
            .map(|t| (t, mesh.triangle_area(t)))
            .filter(|&(_, a)| a > threshold)
            .collect();
        if marked.is_empty() {
            break;
        }
        marked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut touched = vec![false; mesh.triangles.len()];
        let mut plan: Vec<Vec<(usize, usize, Vec<usize>)>> = Vec::new();
        for &(t, _) in &marked {
            if touched[t] {
                continue;
            }
            let tri = mesh.triangles[t];
            let (mut a, mut b) = (tri[0], tri[1]);
            let mut best = -1.0;
            for e in 0..3 {
                let (p, q) = (tri[e], tri[(e + 1) % 3]);
                let len = (mesh.vertices[p] - mesh.vertices[q]).norm_squared();
                if len > best {
                    best = len;
                    (a, b) = (p, q);
                }
            }
            let tris = edge_tris[&sorted(a, b)].clone();
            let mut group = vec![(a, b, tris.clone())];
            if tris.len() == 1 {
                let (Some(&pa), Some(&pb)) = (partner.get(&a), partner.get(&b)) else {
                    continue;
                };
                let Some(ptris) = edge_tris.get(&sorted(pa, pb)) else {
                    continue;
                };
                group.push((pa, pb, ptris.clone()));
            }
            if group.iter().flat_map(|g| g.2.iter()).any(|&s| touched[s]) {
                continue;
            }
            for g in &group {
                for &s in &g.2 {
                    touched[s] = true;
                }
            }
            plan.push(group);
        }
        if plan.is_empty() {
            break;
        }
        for group in plan {
            let mut mids = Vec::new();
            for (a, b, tris) in &group {
                let m = mesh.vertices.len();
                let mid = curved_midpoint(mesh.vertices[*a], mesh.vertices[*b], normals[*a], normals[*b]);
                mesh.vertices.push(mid);
                mids.push(m);
                for &t in tris {
                    let tri = mesh.triangles[t];
                    let mut first = tri;
                    let mut second = tri;
                    for i in 0..3 {
                        if tri[i] == *b {
                            first[i] = m;
                        }
                        if tri[i] == *a {
                            second[i] = m;
                        }
                    }
                    mesh.triangles[t] = first;
                    mesh.triangles.push(second);
                }
                splits_done += 1;
            }
            if mids.len() == 2 {
                let (l, r) = if mesh.vertices[mids[0]].x < mesh.vertices[mids[1]].x {
                    (mids[0], mids[1])
                } else {
                    (mids[1], mids[0])
                };
                let left = mesh.vertices[l];
                mesh.vertices[r] = Vector3::new(left.x + mesh.period, left.y, left.z);
                mesh.periodic_pairs.push((l, r));
            }
        }
    }
    splits_done
}

fn corner_cos(mesh: &SurfaceMesh, tri: [usize; 3], i: usize) -> f64 {
    let p = mesh.vertices[tri[i]];
    let e1 = mesh.vertices[tri[(i + 1) % 3]] - p;
    let e2 = mesh.vertices[tri[(i + 2) % 3]] - p;
    e1.dot(&e2) / (e1.norm() * e2.norm())
}

/// Returns (collapses, flips).
fn coarsen(mesh: &mut SurfaceMesh, opts: &AdaptOptions) -> (usize, usize) {
    let areas: Vec<f64> = (0..mesh.triangles.len()).map(|t| mesh.triangle_area(t)).collect();
    let floor = opts.area_floor_factor * areas.iter().cloned().fold(0.0, f64::max);
    let quality = triangle_qualities(mesh);
    let mut candidates: Vec<usize> = (0..mesh.triangles.len())
        .filter(|&t| areas[t] < floor && quality[t] > opts.q_max)
        .collect();
    candidates.sort_by(|&a, &b| quality[b].total_cmp(&quality[a]).then(a.cmp(&b)));

    let boundary: HashSet<usize> = mesh.periodic_pairs.iter().flat_map(|&(l, r)| [l, r]).collect();
    let normals = vertex_normals(mesh);
    let mut alive_tri = vec![true; mesh.triangles.len()];
    let mut touched = vec![false; mesh.triangles.len()];
    let mut vertex_tris: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            vertex_tris[v].push(t);
        }
    }
    let (mut collapses, mut flips) = (0, 0);
    for t in candidates {
        if !alive_tri[t] || touched[t] {
            continue;
        }
        let tri = mesh.triangles[t];
        let obtuse = (0..3).find(|&i| corner_cos(mesh, tri, i) < 0.0);
        match obtuse {
            Some(i) => {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                if try_flip(mesh, &mut vertex_tris, &alive_tri, &mut touched, t, a, b) {
                    flips += 1;
                }
            }
            None => {
                let mut e = 0;
                let mut best = f64::INFINITY;
                for i in 0..3 {
                    let len = (mesh.vertices[tri[i]] - mesh.vertices[tri[(i + 1) % 3]]).norm();
                    if len < best {
                        best = len;
                        e = i;
                    }
                }
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                if try_collapse(mesh, &mut vertex_tris, &mut alive_tri, &mut touched, &boundary, &normals, a, b) {
                    collapses += 1;
                }
            }
        }
    }
    compact(mesh, &alive_tri);
    (collapses, flips)
}

fn shared_triangles(vertex_tris: &[Vec<usize>], alive: &[bool], a: usize, b: usize) -> Vec<usize> {
    vertex_tris[a]
        .iter()
        .copied()
        .filter(|&t| alive[t] && vertex_tris[b].contains(&t))
        .collect()
}

fn normal_of(mesh: &SurfaceMesh, tri: [usize; 3]) -> Vector3<f64> {
    let (a, b, c) = (mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    (b - a).cross(&(c - a))
}

fn try_flip(
    mesh: &mut SurfaceMesh,
    vertex_tris: &mut [Vec<usize>],
    alive: &[bool],
    touched: &mut [bool],
    t: usize,
    a: usize,
    b: usize,
) -> bool {
    let shared = shared_triangles(vertex_tris, alive, a, b);
    if shared.len() != 2 || shared.iter().any(|&s| touched[s]) {
        return false;
    }
    let s = if shared[0] == t { shared[1] } else { shared[0] };
    let third = |tri: [usize; 3]| tri.into_iter().find(|&v| v != a && v != b).unwrap();
    let (c, d) = (third(mesh.triangles[t]), third(mesh.triangles[s]));
    if !shared_triangles(vertex_tris, alive, c, d).is_empty()
        || vertex_tris[c].iter().any(|&x| alive[x] && mesh.triangles[x].contains(&d))
    {
        return false;
    }
    // Orient the new pair like the old triangle t, which contains a→b or b→a.
    let tri = mesh.triangles[t];
    let i = tri.iter().position(|&v| v == a).unwrap();
    let forward = tri[(i + 1) % 3] == b;
    let (n1, n2) = if forward { ([a, d, c], [d, b, c]) } else { ([a, c, d], [d, c, b]) };
    let reference = normal_of(mesh, mesh.triangles[t]) + normal_of(mesh, mesh.triangles[s]);
    if normal_of(mesh, n1).dot(&reference) <= 0.0 || normal_of(mesh, n2).dot(&reference) <= 0.0 {
        return false;
    }
    mesh.triangles[t] = n1;
    mesh.triangles[s] = n2;
    vertex_tris[a].retain(|&x| x != s);
    vertex_tris[b].retain(|&x| x != t);
    vertex_tris[c].push(s);
    vertex_tris[d].push(t);
    touched[t] = true;
    touched[s] = true;
    true
}

fn try_collapse(
    mesh: &mut SurfaceMesh,
    vertex_tris: &mut [Vec<usize>],
    alive: &mut [bool],
    touched: &mut [bool],
    boundary: &HashSet<usize>,
    normals: &[Vector3<f64>],
    a: usize,
    b: usize,
) -> bool {
    let (keep, gone, target) = match (boundary.contains(&a), boundary.contains(&b)) {
        (true, true) => return false,
        (true, false) => (a, b, mesh.vertices[a]),
        (false, true) => (b, a, mesh.vertices[b]),
        (false, false) => (a, b, curved_midpoint(mesh.vertices[a], mesh.vertices[b], normals[a], normals[b])),
    };
    let shared = shared_triangles(vertex_tris, alive, keep, gone);
    if shared.len() != 2 || shared.iter().any(|&s| touched[s]) {
        return false;
    }
    // Link condition: the endpoints share exactly the two opposite vertices.
    let ring = |v: usize| -> HashSet<usize> {
        vertex_tris[v]
            .iter()
            .filter(|&&t| alive[t])
            .flat_map(|&t| mesh.triangles[t])
            .filter(|&w| w != v)
            .collect()
    };
    if ring(keep).intersection(&ring(gone)).count() != 2 {
        return false;
    }
    let affected: Vec<usize> = vertex_tris[keep]
        .iter()
        .chain(vertex_tris[gone].iter())
        .copied()
        .filter(|&t| alive[t] && !shared.contains(&t))
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    if affected.iter().any(|&t| touched[t]) {
        return false;
    }
    let old_pos = mesh.vertices[keep];
    let before: Vec<Vector3<f64>> = affected.iter().map(|&t| normal_of(mesh, mesh.triangles[t])).collect();
    mesh.vertices[keep] = target;
    let renamed = |tri: [usize; 3]| tri.map(|v| if v == gone { keep } else { v });
    let ok = affected.iter().zip(&before).all(|(&t, n0)| {
        let n1 = normal_of(mesh, renamed(mesh.triangles[t]));
        n1.dot(n0) > 0.0
    });
    if !ok {
        mesh.vertices[keep] = old_pos;
        return false;
    }
    for &t in &affected {
        mesh.triangles[t] = renamed(mesh.triangles[t]);
        touched[t] = true;
    }
    for &s in &shared {
        alive[s] = false;
    }
    let moved: Vec<usize> = vertex_tris[gone].clone();
    vertex_tris[keep].extend(moved);
    vertex_tris[gone].clear();
    true
}

fn compact(mesh: &mut SurfaceMesh, alive_tri: &[bool]) {
    let triangles: Vec<[usize; 3]> = mesh
        .triangles
        .iter()
        .zip(alive_tri)
        .filter(|(_, &a)| a)
        .map(|(t, _)| *t)
        .collect();
    let mut used = vec![false; mesh.vertices.len()];
    for t in &triangles {
        for &v in t {
            used[v] = true;
        }
    }
    let mut new_index = vec![usize::MAX; mesh.vertices.len()];
    let mut vertices = Vec::with_capacity(mesh.vertices.len());
    for (v, p) in mesh.vertices.iter().enumerate() {
        if used[v] {
            new_index[v] = vertices.len();
            vertices.push(*p);
        }
    }
    mesh.triangles = triangles.into_iter().map(|t| t.map(|v| new_index[v])).collect();
    mesh.periodic_pairs = mesh
        .periodic_pairs
        .iter()
        .filter(|&&(l, r)| used[l] && used[r])
        .map(|&(l, r)| (new_index[l], new_index[r]))
        .collect();
    mesh.vertices = vertices;
}
