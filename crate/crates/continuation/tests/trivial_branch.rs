use tubelab_continuation::{continue_branch, detect_bifurcations, trivial_state, ContinuationSettings};
use tubelab_core::linstab::bifurcation_point;
use tubelab_surface::build_cylinder_mesh;
use tubelab_surface::geometry::GeometryFields;

fn settings(c0: f64) -> ContinuationSettings {
    ContinuationSettings { c0, ..Default::default() }
}

#[test]
fn trivial_branch_follows_cylinder_condition_and_localizes_pearling() {
    let s = settings(0.0);
    let start = trivial_state(build_cylinder_mesh(10.0, 1.0, 3000).unwrap(), -0.85, &s).unwrap();
    let branch = continue_branch(&start, -1.0, 2, 0.1, &s).unwrap();
    assert_eq!(branch.states.len(), 3);
    assert!(branch.stopped.is_none());

    let v0 = branch.states[0].diagnostics.reduced_volume;
    for pair in branch.states.windows(2) {
        assert!(pair[1].arclength > pair[0].arclength);
    }
    for st in &branch.states {
        // The discrete cylinder has its own mean curvature H̄ ≈ 1/(2r).
        let h = GeometryFields::of(&st.mesh).unwrap().mean_curvature();
        let hbar = h.iter().sum::<f64>() / h.len() as f64;
        assert!((hbar - 0.5).abs() < 1e-3);
        let want = hbar * hbar - st.lambda.1 / (2.0 * hbar);
        assert!((st.lambda.0 - want).abs() <= 1e-8, "λ₁ {} vs {want}", st.lambda.0);
        assert!((st.diagnostics.reduced_volume - v0).abs() <= 1e-10);
        assert!((v0 - 1.0).abs() < 5e-3);
        assert!(st.multipliers.iter().all(|m| m.abs() <= 1e-5));
        assert!(st.residual_sup <= 1e-10);
    }
    assert_eq!(branch.states[0].n_unstable, 0);
    assert_eq!(branch.states[2].n_unstable, 2);

    let bps = detect_bifurcations(&branch, &s).unwrap();
    assert_eq!(bps.len(), 1);
    let bp = &bps[0];
    assert_eq!((bp.mode_m, bp.mode_n, bp.multiplicity), (1, 0, 2));
    let exact = bifurcation_point(1, 0, 10.0, 0.0, 1.0).unwrap();
    // Discretization limits the 3000-node mesh to about three digits.
    assert!((bp.lambda2 - exact).abs() <= 1e-3, "{} vs {exact}", bp.lambda2);
    assert_eq!(bp.kernel.len(), 2);
    assert!(bp.state.is_some());
}

#[test]
fn branch_inside_the_window_has_no_bifurcations() {
    let s = settings(0.0);
    let start = trivial_state(build_cylinder_mesh(10.0, 1.0, 1500).unwrap(), 0.0, &s).unwrap();
    let branch = continue_branch(&start, 1.0, 2, 0.1, &s).unwrap();
    assert!(branch.states.iter().all(|st| st.n_unstable == 0));
    assert!(detect_bifurcations(&branch, &s).unwrap().is_empty());
    assert!(branch.states.last().unwrap().lambda.1 > 0.15);
}
