use tubelab_continuation::compare::{amplitude_samples, onset_slope};
use tubelab_continuation::{
    continue_branch, switch_branch, trivial_state, BifurcationPoint, BranchKind, BranchState, ContinuationError,
    ContinuationSettings,
};
use tubelab_core::amplitude::pearling_ae;
use tubelab_core::linstab::bifurcation_point;
use tubelab_surface::build_cylinder_mesh;
use tubelab_surface::deform::project_amplitude;

/// The straight cylinder at the analytic critical λ₂, standing in for a localized BP.
fn cylinder_bp(nodes: usize, c0: f64, mode: (i32, i32), multiplicity: usize, settings: &ContinuationSettings) -> BifurcationPoint {
    let lambda2 = bifurcation_point(mode.0, mode.1, 10.0, c0, 1.0).unwrap();
    let state = trivial_state(build_cylinder_mesh(10.0, 1.0, nodes).unwrap(), lambda2, settings).unwrap();
    BifurcationPoint {
        lambda2,
        mode_m: mode.0,
        mode_n: mode.1,
        multiplicity,
        lambda1: state.lambda.0,
        arclength: 0.0,
        state: Some(state),
        kernel: Vec::new(),
    }
}

fn amp(s: &BranchState, m: i32, n: i32) -> f64 {
    project_amplitude(&s.mesh, m, n).unwrap().norm()
}

#[test]
fn pearling_branch_matches_amplitude_equation_and_stays_axisymmetric() {
    let s = ContinuationSettings { stability: false, ds_max: 0.02, ..Default::default() };
    let bp = cylinder_bp(3000, 0.0, (1, 0), 2, &s);
    let seed = switch_branch(&bp, BranchKind::Pearling, 0.04, &s).unwrap();
    assert!((seed.amplitude.norm() - 0.02).abs() < 1e-3);
    let branch = continue_branch(&seed, 1.0, 8, 0.01, &ContinuationSettings { track_mode: (1, 0), ..s }).unwrap();
    assert!(branch.stopped.is_none());

    for st in &branch.states {
        let primary = st.amplitude.norm();
        for (m, n) in [(0, 1), (0, 2), (1, 1), (1, -1)] {
            assert!(amp(st, m, n) <= 1e-3 * primary, "({m},{n}) content on a pearling state");
        }
        assert!(st.multipliers.iter().all(|m| m.abs() <= 1e-5));
        assert!(st.residual_sup <= 1e-10);
    }

    let samples = amplitude_samples(&branch.states, 0.1);
    assert!(samples.len() >= 6);
    let slope = onset_slope(&samples).unwrap();
    let ae = pearling_ae(0.0, 10.0, 1).unwrap();
    let a = ae.steady_amplitude().unwrap();
    let predicted = a * a / ae.beta2;
    assert!((slope - predicted).abs() <= 0.05 * predicted.abs(), "slope {slope} vs {predicted}");
}

#[test]
fn coiling_seed_is_one_helix_and_buckling_seed_is_balanced() {
    let s = ContinuationSettings { stability: false, ..Default::default() };
    let bp = cylinder_bp(2000, 0.0, (1, 1), 4, &s);

    let coil = switch_branch(&bp, BranchKind::Coiling, 0.1, &s).unwrap();
    assert!(amp(&coil, 1, 1) > 0.04);
    assert!(amp(&coil, 1, -1) <= 0.01 * amp(&coil, 1, 1));
    assert!(coil.multipliers.iter().all(|m| m.abs() <= 1e-5));

    let buckle = switch_branch(&bp, BranchKind::Buckling, 0.1, &s).unwrap();
    let (p, q) = (amp(&buckle, 1, 1), amp(&buckle, 1, -1));
    assert!(p > 0.02);
    assert!((p - q).abs() <= 0.01 * p.max(q), "{p} vs {q}");
    assert!(buckle.multipliers.iter().all(|m| m.abs() <= 1e-5));
}

#[test]
fn degenerate_switch_requests_are_rejected() {
    let s = ContinuationSettings { stability: false, ..Default::default() };
    let bp = cylinder_bp(600, 0.0, (1, 0), 2, &s);
    assert!(matches!(switch_branch(&bp, BranchKind::Pearling, 0.0, &s), Err(ContinuationError::Invalid(_))));
    assert!(matches!(switch_branch(&bp, BranchKind::Wrinkling, 0.05, &s), Err(ContinuationError::Invalid(_))));
    let bare = BifurcationPoint { state: None, ..bp.clone() };
    assert!(switch_branch(&bare, BranchKind::Pearling, 0.05, &s).is_err());
    let simple = BifurcationPoint { multiplicity: 1, ..bp };
    assert!(switch_branch(&simple, BranchKind::Pearling, 0.05, &s).is_err());
}

#[test]
fn buckling_is_stable_and_coiling_unstable_near_onset_at_c0_048() {
    let s = ContinuationSettings { c0: 0.48, ..Default::default() };
    let bp = cylinder_bp(3000, 0.48, (1, 1), 4, &s);
    let buckle = switch_branch(&bp, BranchKind::Buckling, 0.06, &s).unwrap();
    let coil = switch_branch(&bp, BranchKind::Coiling, 0.06, &s).unwrap();
    assert_eq!(buckle.n_unstable, 0);
    assert!(coil.n_unstable >= 1);
}
