use tubelab_solver::{flow_step, perturb_bump, perturb_eigen, run_flow, trajectory_csv, FlowControls, FlowState, StopReason};
use tubelab_surface::geometry::{area, helfrich_energy, mean_curvature, volume};
use tubelab_surface::{cylinder_grid, SurfaceMesh};

/// The discrete cylinder is steady with its own mean curvature H̄.
fn steady_lambda(mesh: &SurfaceMesh, lambda2: f64) -> (f64, f64) {
    let h = mean_curvature(mesh).unwrap();
    let hbar = h.iter().sum::<f64>() / h.len() as f64;
    (hbar * hbar - lambda2 / (2.0 * hbar), lambda2)
}

fn tube() -> SurfaceMesh {
    cylinder_grid(10.0, 1.0, 40, 24).unwrap()
}

#[test]
fn steady_state_is_a_fixed_point_of_the_step() {
    let mesh = tube();
    let lambda = steady_lambda(&mesh, 0.3);
    let state = FlowState::new(mesh, lambda, 0.0, 0.05).unwrap();
    let out = flow_step(&state, 1e-6, 8).unwrap();
    assert!(out.reduced, "the straight cylinder is a CMC state");
    assert!(out.iterations <= 1);
    assert!(out.update_sup() <= 1e-10);
    assert!((out.state.lambda.0 - lambda.0).abs() <= 1e-10);
    assert!((out.state.lambda.1 - lambda.1).abs() <= 1e-8);
    assert!((out.state.time - 0.05).abs() < 1e-15);
}

#[test]
fn step_from_a_perturbed_stable_tube_lowers_the_energy() {
    let mesh = tube();
    let lambda = steady_lambda(&mesh, 0.0);
    let bumped = perturb_bump(&mesh, -0.05, 1.0).unwrap();
    let state = FlowState::new(bumped, lambda, 0.0, 0.01).unwrap();
    let (e0, _) = state.energy().unwrap();
    let out = flow_step(&state, 1e-8, 8).unwrap();
    assert!(!out.reduced);
    let (e1, _) = out.state.energy().unwrap();
    assert!(e1 < e0, "{e1} ≥ {e0}");
    let (a0, v0) = state.conserved;
    assert!((area(&out.state.mesh) - a0).abs() / a0 <= 1e-7);
    assert!((volume(&out.state.mesh).unwrap() - v0).abs() / v0 <= 1e-5);
}

#[test]
fn step_displacement_is_first_order_in_h() {
    let mesh = tube();
    let lambda = steady_lambda(&mesh, 0.0);
    let bumped = perturb_bump(&mesh, -0.05, 1.0).unwrap();
    let size = |h: f64| {
        let s = FlowState::new(bumped.clone(), lambda, 0.0, h).unwrap();
        flow_step(&s, 1e-7, 20).unwrap().update_sup()
    };
    // Stiff short-wavelength content makes the ratio approach 2 from below.
    let ratio = size(5e-4) / size(2.5e-4);
    assert!(ratio > 1.85 && ratio < 2.05, "ratio {ratio}");
}

#[test]
fn seam_bump_with_negative_delta_grows_area_and_volume() {
    let mesh = tube();
    let (a, v) = (area(&mesh), volume(&mesh).unwrap());
    let bumped = perturb_bump(&mesh, -0.125, 1.0).unwrap();
    assert!(area(&bumped) > a);
    assert!(volume(&bumped).unwrap() > v);
    assert_eq!(perturb_bump(&mesh, 0.0, 1.0).unwrap().vertices, mesh.vertices);
    assert!(perturb_bump(&mesh, -0.1, 0.0).is_err());
}

#[test]
fn constraint_tangent_direction_changes_area_and_volume_at_second_order() {
    let mesh = tube();
    let k = 2.0 * std::f64::consts::PI * 2.0 / mesh.period;
    let dofs = mesh.dofs();
    // Zero mean along the axis, hence orthogonal to both cylinder gradients.
    let psi: Vec<f64> = dofs.vertex_of.iter().map(|&v| (k * mesh.vertices[v].x).cos()).collect();
    let (a, v) = (area(&mesh), volume(&mesh).unwrap());
    let change = |d: f64| {
        let m = perturb_eigen(&mesh, &psi, d).unwrap();
        ((area(&m) - a).abs(), (volume(&m).unwrap() - v).abs())
    };
    let (big, small) = (change(0.02), change(0.01));
    assert!((big.0 / small.0 - 4.0).abs() < 0.2, "area ratio {}", big.0 / small.0);
    assert!((big.1 / small.1 - 4.0).abs() < 0.2, "volume ratio {}", big.1 / small.1);
    assert!(perturb_eigen(&mesh, &psi[1..], 0.01).is_err());
    assert!(perturb_eigen(&mesh, &vec![0.0; psi.len()], 0.01).is_err());
    assert_eq!(perturb_eigen(&mesh, &psi, 0.0).unwrap().vertices, mesh.vertices);
}

#[test]
fn unperturbed_flow_stops_immediately_with_one_row() {
    let mesh = tube();
    let lambda = steady_lambda(&mesh, 0.3);
    let state = FlowState::new(mesh, lambda, 0.0, 0.01).unwrap();
    let run = run_flow(&state, &FlowControls::default()).unwrap();
    assert_eq!(run.stop, StopReason::Converged);
    assert_eq!(run.rows.len(), 1);
    assert_eq!(run.energy_violations, 0);
    assert_eq!(trajectory_csv(&run.rows).lines().count(), 2);
}

#[test]
fn short_flow_conserves_and_decreases_energy() {
    let mesh = tube();
    let lambda = steady_lambda(&mesh, 0.0);
    let state = FlowState::new(perturb_bump(&mesh, -0.05, 1.0).unwrap(), lambda, 0.0, 0.01).unwrap();
    let controls = FlowControls { max_steps: 6, ..Default::default() };
    let run = run_flow(&state, &controls).unwrap();
    assert_eq!(run.stop, StopReason::StepLimit);
    assert_eq!(run.rows.len(), 7);
    assert_eq!(run.energy_violations, 0);
    for pair in run.rows.windows(2) {
        assert!(pair[1].energy <= pair[0].energy * (1.0 + 1e-8));
        assert!(pair[1].t > pair[0].t);
    }
    for r in &run.rows {
        assert!(r.area_rel_err.abs() <= 10.0 * controls.tol);
        assert!(r.vol_rel_err.abs() <= 1e3 * controls.tol);
    }
    let (e, _) = helfrich_energy(&run.state.mesh, 0.0).unwrap();
    assert!((run.rows.last().unwrap().energy - e).abs() <= 1e-12 * e);

    let again = run_flow(&state, &controls).unwrap();
    assert_eq!(trajectory_csv(&run.rows), trajectory_csv(&again.rows));
}

#[test]
fn inconsistent_controls_are_rejected() {
    let state = FlowState::new(tube(), (0.25, 0.0), 0.0, 0.01).unwrap();
    let bad = FlowControls { h_min: 1.0, h0: 0.1, ..Default::default() };
    assert!(run_flow(&state, &bad).is_err());
    let neg = FlowState { step_size: -1.0, ..state };
    assert!(flow_step(&neg, 1e-6, 8).is_err());
}
