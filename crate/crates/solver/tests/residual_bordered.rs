use faer::sparse::Triplet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use tubelab_core::linstab::lambda1_on_cylinder;
use tubelab_solver::mixed::{self, lambda_columns, pad_u, Coefficients, Frame};
use tubelab_solver::{bordered_solve, residual, BorderedSystem, Elimination, SolverError};
use tubelab_surface::geometry::voronoi_mass;
use tubelab_surface::{build_cylinder_mesh, cylinder_grid};

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Strong-form sup-norm of the fourth-order residual on the straight cylinder.
fn cylinder_residual(nodes: usize, lambda2: f64) -> f64 {
    let mesh = build_cylinder_mesh(10.0, 1.0, nodes).unwrap();
    let l1 = lambda1_on_cylinder(lambda2, 0.0, 1.0).unwrap();
    let r = residual(&mesh, (l1, lambda2), 0.0, None, None).unwrap();
    let mass = voronoi_mass(&mesh).unwrap();
    sup(&r.pde.iter().zip(&mass).map(|(p, m)| p / m).collect::<Vec<_>>())
}

#[test]
fn cylinder_is_steady_up_to_second_order_discretization_error() {
    let coarse = cylinder_residual(750, 0.3);
    let fine = cylinder_residual(3000, 0.3);
    assert!(fine <= 1e-3, "{fine}");
    // Doubling the node count halves h², so at least second order in h is an
    // order of one here.
    let order = (coarse / fine).log2();
    assert!(order >= 0.9, "observed order {order} in node count");
}

#[test]
fn residual_is_affine_in_lambda1() {
    let mesh = build_cylinder_mesh(10.0, 1.0, 800).unwrap();
    let mass = voronoi_mass(&mesh).unwrap();
    let h = tubelab_surface::geometry::mean_curvature(&mesh).unwrap();
    let l1 = lambda1_on_cylinder(0.2, 0.0, 1.0).unwrap();
    let delta = 0.01;
    let a = residual(&mesh, (l1, 0.2), 0.0, None, None).unwrap();
    let b = residual(&mesh, (l1 + delta, 0.2), 0.0, None, None).unwrap();
    for i in 0..mass.len() {
        let want = -2.0 * delta * mass[i] * h[i];
        assert!((b.pde[i] - a.pde[i] - want).abs() <= 1e-12 * mass[i].max(1.0));
        assert!(((b.pde[i] - a.pde[i]) / mass[i] + delta).abs() < 1e-2 * delta);
    }
}

#[test]
fn constraint_residuals_follow_the_requested_targets() {
    let mesh = build_cylinder_mesh(10.0, 1.0, 800).unwrap();
    let a = tubelab_surface::geometry::area(&mesh);
    let v = tubelab_surface::geometry::volume(&mesh).unwrap();
    let r = residual(&mesh, (0.25, 0.0), 0.0, Some(a + 1.0), Some(v)).unwrap();
    assert_eq!(r.constraints.len(), 2);
    assert!((r.constraints[0] + 1.0).abs() < 1e-12);
    assert!(r.constraints[1].abs() < 1e-12);
    assert!(residual(&mesh, (0.25, 0.0), 0.0, None, Some(v)).unwrap().constraints.len() == 1);
}

#[test]
fn residual_changes_boundedly_under_tiny_jitter() {
    let mesh = build_cylinder_mesh(10.0, 1.0, 800).unwrap();
    let base = residual(&mesh, (0.25, 0.0), 0.0, None, None).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let mut jittered = mesh.clone();
    for p in jittered.vertices.iter_mut() {
        p.y += rng.gen_range(-1e-6..1e-6);
        p.z += rng.gen_range(-1e-6..1e-6);
    }
    for &(a, b) in &mesh.periodic_pairs {
        let left = jittered.vertices[a];
        jittered.vertices[b] = left + nalgebra::Vector3::new(mesh.period, 0.0, 0.0);
    }
    let moved = residual(&jittered, (0.25, 0.0), 0.0, None, None).unwrap();
    let change = sup(&moved.pde.iter().zip(&base.pde).map(|(a, b)| a - b).collect::<Vec<_>>());
    assert!(change > 0.0 && change < 1e-3);
}

fn identity(n: usize) -> Vec<Triplet<usize, usize, f64>> {
    (0..n).map(|i| Triplet::new(i, i, 1.0)).collect()
}

#[test]
fn zero_borders_reduce_to_a_core_solve() {
    let core = vec![Triplet::new(0, 0, 2.0), Triplet::new(0, 1, 1.0), Triplet::new(1, 0, 1.0), Triplet::new(1, 1, 3.0)];
    let sys = BorderedSystem { n: 2, core, border_columns: vec![], border_rows: vec![], corner: vec![], rhs: vec![3.0, 4.0] };
    let sol = bordered_solve(&sys).unwrap();
    assert_eq!(sol.method, Elimination::Block);
    assert!((sol.solution[0] - 1.0).abs() < 1e-14 && (sol.solution[1] - 1.0).abs() < 1e-14);
}

#[test]
fn identity_core_with_one_border_matches_the_block_inverse() {
    let b = vec![1.0, 2.0, -1.0];
    let c = vec![0.5, -1.0, 2.0];
    let d = 4.0;
    let f = vec![1.0, 0.0, 2.0];
    let g = 3.0;
    let mut rhs = f.clone();
    rhs.push(g);
    let sys = BorderedSystem { n: 3, core: identity(3), border_columns: vec![b.clone()], border_rows: vec![c.clone()], corner: vec![vec![d]], rhs };
    let sol = bordered_solve(&sys).unwrap();
    let ctf: f64 = c.iter().zip(&f).map(|(x, y)| x * y).sum();
    let ctb: f64 = c.iter().zip(&b).map(|(x, y)| x * y).sum();
    let y = (g - ctf) / (d - ctb);
    for i in 0..3 {
        assert!((sol.solution[i] - (f[i] - b[i] * y)).abs() < 1e-14);
    }
    assert!((sol.solution[3] - y).abs() < 1e-14);
    assert!(sol.backward_error <= 1e-10);
}

#[test]
fn parallel_constraint_rows_on_the_cylinder_are_reported_singular() {
    let frame = Frame::new(cylinder_grid(10.0, 1.0, 20, 16).unwrap()).unwrap();
    let n = frame.n();
    let h = frame.base.mean_curvature();
    let p = Coefficients { c0: 0.0, lambda1: 0.25, lambda2: 0.0 };
    let mut core = mixed::jacobian(&frame, &vec![0.0; n], &h, &p).unwrap();
    // A shift keeps the core itself regular so that only the border is singular.
    core.extend((0..n).map(|i| Triplet::new(n + i, i, -frame.base.mass[i])));
    let [c1, c2] = lambda_columns(&frame.base, &h);
    let (ga, gv) = frame.constraint_gradients(&vec![0.0; n]);
    let sys = BorderedSystem {
        n: 2 * n,
        core,
        border_columns: vec![c1, c2],
        border_rows: vec![pad_u(&ga), pad_u(&gv)],
        corner: vec![vec![0.0; 2]; 2],
        rhs: vec![1.0; 2 * n + 2],
    };
    assert!(mixed::angle_between(&ga, &gv) < 1e-12);
    let r = bordered_solve(&sys);
    assert!(matches!(r, Err(SolverError::SingularBorder { .. })));
}

#[test]
fn mismatched_shapes_are_rejected() {
    let sys = BorderedSystem { n: 2, core: identity(2), border_columns: vec![vec![1.0; 3]], border_rows: vec![vec![1.0; 2]], corner: vec![vec![0.0]], rhs: vec![0.0; 3] };
    assert!(matches!(bordered_solve(&sys), Err(SolverError::Shape(_))));
    let wide = BorderedSystem {
        n: 1,
        core: identity(1),
        border_columns: vec![vec![1.0]; 7],
        border_rows: vec![vec![1.0]; 7],
        corner: vec![vec![0.0; 7]; 7],
        rhs: vec![0.0; 8],
    };
    assert!(matches!(bordered_solve(&wide), Err(SolverError::Shape(_))));
}

/// Jacobian-vector product from the assembled triplets.
fn apply(trip: &[Triplet<usize, usize, f64>], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for t in trip {
        out[t.row] += t.val * v[t.col];
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn jacobian_action_matches_directional_differences(seed in any::<u64>(), c0 in -1.0f64..1.0, l1 in -0.5f64..1.0, l2 in -1.0f64..1.0) {
        let frame = Frame::new(cylinder_grid(10.0, 1.0, 24, 16).unwrap()).unwrap();
        let n = frame.n();
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.02..0.02)).collect();
        let h: Vec<f64> = (0..n).map(|_| 0.5 + rng.gen_range(-0.1..0.1)).collect();
        let dir: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = Coefficients { c0, lambda1: l1, lambda2: l2 };
        let jv = apply(&mixed::jacobian(&frame, &u, &h, &p).unwrap(), &dir);

        let eps = 1e-6;
        let eval = |s: f64| {
            let uu: Vec<f64> = (0..n).map(|i| u[i] + s * dir[i]).collect();
            let hh: Vec<f64> = (0..n).map(|i| h[i] + s * dir[n + i]).collect();
            let ev = mixed::evaluate(&frame, &uu, &hh, &p).unwrap();
            [ev.eq1, ev.eq2].concat()
        };
        let (fp, fm) = (eval(eps), eval(-eps));
        let fd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let err = sup(&jv.iter().zip(&fd).map(|(a, b)| a - b).collect::<Vec<_>>());
        prop_assert!(err <= 1e-4 * sup(&fd), "relative error {}", err / sup(&fd));
    }
}
