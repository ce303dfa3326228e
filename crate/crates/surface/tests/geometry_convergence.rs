use std::f64::consts::PI;

use tubelab_surface::geometry::{self, GeometryFields};
use tubelab_surface::{build_cylinder_mesh, cylinder_grid, normalized_quality};

fn rms_rel(values: &[f64], exact: f64) -> f64 {
    (values.iter().map(|v| (v / exact - 1.0).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

#[test]
fn cylinder_curvatures_area_volume() {
    for &(l, r, target) in &[(10.0, 1.0, 2000usize), (10.0, 1.0, 5000), (4.0, 0.7, 3000)] {
        let mesh = build_cylinder_mesh(l, r, target).unwrap();
        let g = GeometryFields::of(&mesh).unwrap();
        let h = g.mean_curvature();
        let k = g.gauss_curvature();
        let e_h = rms_rel(&h, 0.5 / r);
        let k_max = k.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let e_a = (geometry::area(&mesh) / (2.0 * PI * r * l) - 1.0).abs();
        let e_v = (geometry::volume(&mesh).unwrap() / (PI * r * r * l) - 1.0).abs();
        println!("L={l} r={r} n={} H rms {e_h:.2e} |K| {k_max:.2e} area {e_a:.2e} vol {e_v:.2e}", mesh.n_dofs());
        assert!(e_h <= 0.01, "H rms {e_h}");
        assert!(k_max <= 0.05, "K max {k_max}");
        assert!(e_a <= 0.005, "area {e_a}");
        assert!(e_v <= 0.005, "volume {e_v}");
    }
}

#[test]
fn second_order_convergence() {
    // Doubling both resolutions should quarter the area and H errors.
    let errs: Vec<(f64, f64)> = [(16usize, 16usize), (32, 32), (64, 64)]
        .iter()
        .map(|&(nx, nphi)| {
            let mesh = cylinder_grid(6.0, 1.0, nx, nphi).unwrap();
            let h = geometry::mean_curvature(&mesh).unwrap();
            let e_a = (geometry::area(&mesh) / (2.0 * PI * 6.0) - 1.0).abs();
            (e_a, rms_rel(&h, 0.5))
        })
        .collect();
    for w in errs.windows(2) {
        let order_a = (w[0].0 / w[1].0).log2();
        let order_h = (w[0].1 / w[1].1).log2();
        println!("area order {order_a:.3}, H order {order_h:.3}");
        assert!((order_a - 2.0).abs() < 0.2, "area order {order_a}");
        assert!((order_h - 2.0).abs() < 0.3, "H order {order_h}");
    }
}

#[test]
fn fresh_mesh_quality() {
    for target in [500, 2000, 5000] {
        let mesh = build_cylinder_mesh(10.0, 1.0, target).unwrap();
        let q = normalized_quality(&mesh);
        assert!(q <= 2.5, "normalized quality {q}");
        let n = mesh.n_dofs() as f64;
        assert!((n / target as f64 - 1.0).abs() <= 0.1, "{n} dofs for target {target}");
    }
}

#[test]
fn laplacian_is_symmetric_semidefinite_with_constant_kernel() {
    let mesh = cylinder_grid(5.0, 1.0, 12, 10).unwrap();
    let l = geometry::cotan_laplacian(&mesh).unwrap().to_dense();
    let n = l.nrows();
    for i in 0..n {
        let row: f64 = (0..n).map(|j| l[(i, j)]).sum();
        assert!(row.abs() < 1e-12);
        for j in 0..n {
            assert!((l[(i, j)] - l[(j, i)]).abs() < 1e-12);
        }
    }
    let eig = l.self_adjoint_eigen(faer::Side::Lower).unwrap();
    let s = eig.S();
    let min = (0..n).map(|i| s[i]).fold(f64::INFINITY, f64::min);
    assert!(min > -1e-10, "smallest eigenvalue {min}");
}
