use std::f64::consts::PI;

use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use tubelab_surface::deform::{displace, displace_along, project_amplitude};
use tubelab_surface::geometry::{self, displacement_directions};
use tubelab_surface::io::{from_off, pairs_sidecar, to_off, to_vtk};
use tubelab_surface::{adapt, cylinder_grid, mesh_quality, AdaptOptions, SurfaceError, SurfaceMesh};

fn bumpy(seed: u64, amp: f64) -> SurfaceMesh {
    let mesh = cylinder_grid(4.0, 1.0, 16, 14).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let u: Vec<f64> = (0..mesh.n_dofs()).map(|_| rng.gen_range(-amp..amp)).collect();
    displace(&mesh, &u).unwrap()
}

fn check_gradient(mesh: &SurfaceMesh, f: impl Fn(&SurfaceMesh) -> f64, g: &[f64]) {
    let dirs = displacement_directions(mesh).unwrap();
    let n = mesh.n_dofs();
    let h = 1e-6;
    for i in (0..n).step_by(7) {
        let mut u = vec![0.0; n];
        u[i] = h;
        let plus = f(&displace_along(mesh, &u, &dirs).unwrap());
        u[i] = -h;
        let minus = f(&displace_along(mesh, &u, &dirs).unwrap());
        let fd = (plus - minus) / (2.0 * h);
        assert!((fd - g[i]).abs() <= 1e-7 * (1.0 + g[i].abs()), "dof {i}: fd {fd} vs {}", g[i]);
    }
}

#[test]
fn area_and_volume_gradients_match_finite_differences() {
    for seed in 0..3 {
        let mesh = bumpy(seed, 0.08);
        check_gradient(&mesh, geometry::area, &geometry::area_gradient(&mesh).unwrap());
        check_gradient(&mesh, |m| geometry::volume(m).unwrap(), &geometry::volume_gradient(&mesh).unwrap());
    }
}

#[test]
fn outward_displacement_grows_the_tube() {
    let mesh = cylinder_grid(4.0, 1.0, 16, 14).unwrap();
    let u = vec![0.1; mesh.n_dofs()];
    let grown = displace(&mesh, &u).unwrap();
    assert!(geometry::area(&grown) > geometry::area(&mesh));
    assert!(geometry::volume(&grown).unwrap() > geometry::volume(&mesh).unwrap());
}

#[test]
fn guard_rejects_collapsing_displacement() {
    let mesh = cylinder_grid(4.0, 1.0, 8, 8).unwrap();
    let mut u = vec![0.0; mesh.n_dofs()];
    u[3] = -0.96;
    assert!(matches!(displace(&mesh, &u), Err(SurfaceError::Guard { dof: 3, .. })));
    assert!(matches!(displace(&mesh, &[0.0; 2]), Err(SurfaceError::FieldLength { .. })));
}

#[test]
fn projection_recovers_mode_amplitude() {
    let mesh = cylinder_grid(10.0, 1.0, 80, 32).unwrap();
    let dofs = mesh.dofs();
    for &(m, n, eps) in &[(1, 0, 0.05), (3, 0, 0.02), (1, 1, 0.03), (0, 2, 0.04)] {
        let k = 2.0 * PI * m as f64 / 10.0;
        let radial: Vec<Vector3<f64>> = dofs
            .vertex_of
            .iter()
            .map(|&v| {
                let p = mesh.vertices[v];
                -Vector3::new(0.0, p.y, p.z).normalize()
            })
            .collect();
        let u: Vec<f64> = dofs
            .vertex_of
            .iter()
            .map(|&v| {
                let p = mesh.vertices[v];
                eps * (k * p.x + n as f64 * p.z.atan2(p.y)).cos()
            })
            .collect();
        let c = project_amplitude(&displace_along(&mesh, &u, &radial).unwrap(), m, n).unwrap();
        assert!((c.re - eps / 2.0).abs() < 0.02 * eps, "({m},{n}) {c}");
        assert!(c.im.abs() < 0.02 * eps, "({m},{n}) {c}");
        let other = project_amplitude(&displace_along(&mesh, &u, &radial).unwrap(), m + 1, n).unwrap();
        assert!(other.norm() < 0.02 * eps);
    }
}

#[test]
fn adapt_is_noop_on_fresh_mesh() {
    let mesh = cylinder_grid(10.0, 1.0, 40, 20).unwrap();
    let (out, report) = adapt(&mesh, &AdaptOptions::default()).unwrap();
    assert!(!report.changed());
    assert_eq!(out, mesh);
}

#[test]
fn adapt_refines_stretched_region_and_keeps_topology() {
    let mesh = cylinder_grid(6.0, 1.0, 24, 16).unwrap();
    let dofs = mesh.dofs();
    // A wide bulge stretches triangles near x = 3 and across the seam.
    let u: Vec<f64> = dofs
        .vertex_of
        .iter()
        .map(|&v| {
            let x = mesh.vertices[v].x;
            0.6 * (-(x - 3.0).powi(2)).exp() + 0.5 * (-(x.min(6.0 - x)).powi(2)).exp()
        })
        .collect();
    let bulged = displace(&mesh, &u).unwrap();
    let (out, report) = adapt(&bulged, &AdaptOptions::default()).unwrap();
    assert!(report.refined > 0);
    out.validate().unwrap();
    assert_eq!(out.euler_characteristic(), 0);
    assert_eq!(out.boundary_loops().unwrap().len(), 2);
    assert!(out.n_dofs() > bulged.n_dofs());
    let max_area = (0..out.triangles.len()).map(|t| out.triangle_area(t)).fold(0.0, f64::max);
    assert!(max_area <= 1.3 * out.reference_area * 1.0001);
    // Refinement keeps every old vertex in place; new ones sit on the curved edges,
    // which changes the area only at O(h²κ).
    assert!(bulged.vertices.iter().all(|v| out.vertices.contains(v)));
    let da = geometry::area(&out) / geometry::area(&bulged) - 1.0;
    assert!(da.abs() < 5e-3, "area change {da}");
    let seam = out.left_loop().unwrap();
    assert!(seam.len() > bulged.left_loop().unwrap().len());
}

#[test]
fn adapt_coarsening_repairs_slivers() {
    let mut mesh = cylinder_grid(4.0, 1.0, 16, 14).unwrap();
    // Pull one interior vertex almost onto a neighbour to create slivers.
    let dofs = mesh.dofs();
    let v = dofs.vertex_of.iter().copied().find(|&v| !dofs.on_boundary[mesh.dofs().dof_of[v]] && (mesh.vertices[v].x - 2.0).abs() < 0.2).unwrap();
    let nb = mesh.triangles.iter().find(|t| t.contains(&v)).unwrap();
    let w = *nb.iter().find(|&&w| w != v).unwrap();
    mesh.vertices[v] = mesh.vertices[w] + 0.03 * (mesh.vertices[v] - mesh.vertices[w]);
    let q0 = mesh_quality(&mesh);
    assert!(q0 > 8.0);
    let (out, report) = adapt(&mesh, &AdaptOptions::default()).unwrap();
    assert!(report.collapsed + report.flipped > 0);
    assert!(report.quality_after < q0);
    assert_eq!(out.euler_characteristic(), 0);
}

#[test]
fn off_round_trip() {
    let mesh = bumpy(11, 0.05);
    let back = from_off(&to_off(&mesh), &pairs_sidecar(&mesh)).unwrap();
    assert_eq!(back.triangles, mesh.triangles);
    assert_eq!(back.periodic_pairs, mesh.periodic_pairs);
    assert_eq!(back.inward, mesh.inward);
    for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
        assert!((a - b).norm() < 1e-12);
    }
    assert!((back.period - mesh.period).abs() < 1e-15);
    let h = mesh.dofs().to_vertices(&geometry::mean_curvature(&mesh).unwrap());
    let vtk = to_vtk(&mesh, &[("H", &h)]).unwrap();
    assert!(vtk.contains("SCALARS H"));
    assert!(from_off("OFF\n1 0 0\n0 0 0\n", &pairs_sidecar(&mesh)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rigid_rotation_preserves_geometry(seed in 0u64..1000, theta in 0.0..(2.0 * PI), shift in -2.0..2.0f64) {
        let mesh = bumpy(seed, 0.1);
        let mut moved = mesh.clone();
        let (s, c) = theta.sin_cos();
        for p in moved.vertices.iter_mut() {
            *p = Vector3::new(p.x + shift, c * p.y - s * p.z, s * p.y + c * p.z);
        }
        let a = geometry::geometry_report(&mesh, 0.3).unwrap();
        let b = geometry::geometry_report(&moved, 0.3).unwrap();
        prop_assert!((a.area - b.area).abs() < 1e-10 * a.area);
        prop_assert!((a.volume - b.volume).abs() < 1e-10 * a.volume);
        prop_assert!((a.energy - b.energy).abs() < 1e-9 * a.energy.abs().max(1.0));
        prop_assert!((a.mesh_quality - b.mesh_quality).abs() < 1e-9);
    }

    #[test]
    fn mass_sums_to_area_and_angle_defects_vanish_in_total(seed in 0u64..1000) {
        let mesh = bumpy(seed, 0.1);
        let g = geometry::GeometryFields::of(&mesh).unwrap();
        let total: f64 = g.mass.iter().sum();
        prop_assert!((total - g.area).abs() < 1e-10 * g.area);
        // Gauss–Bonnet on a torus-like periodic tube.
        let defect: f64 = g.angle_defect().iter().sum();
        prop_assert!(defect.abs() < 1e-9);
    }
}
