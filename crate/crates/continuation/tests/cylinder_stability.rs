use tubelab_continuation::bifurcation::dominant_mode;
use tubelab_continuation::stability_on_frame;
use tubelab_core::linstab::{cylinder_spectrum, lambda1_on_cylinder, ModelParams};
use tubelab_solver::mixed::Frame;
use tubelab_surface::build_cylinder_mesh;

fn check_against_dispersion(c0: f64, lambda2: f64, leading: usize) {
    let l = 10.0;
    let frame = Frame::new(build_cylinder_mesh(l, 1.0, 3000).unwrap()).unwrap();
    let lambda1 = lambda1_on_cylinder(lambda2, c0, 1.0).unwrap();
    let st = stability_on_frame(&frame, c0, (lambda1, lambda2), 12).unwrap();
    assert!(st.constraints_degenerate, "cylinder constraint gradients are parallel");
    assert_eq!(st.translational.len(), 2, "y and z translations: {:?}", st.translational);

    // (0,1) is the translation pair, reported separately.
    let params = ModelParams::new(c0, l, lambda2).unwrap();
    let exact: Vec<f64> = cylinder_spectrum(&params, 12, 6)
        .into_iter()
        .filter(|d| !(d.mode.m == 0 && d.mode.n == 1))
        .flat_map(|d| std::iter::repeat(d.mu).take(d.multiplicity as usize))
        .collect();
    for (i, (mu, want)) in st.eigenvalues.iter().zip(&exact).take(leading).enumerate() {
        assert!(mu.im.abs() < 1e-8, "eigenvalue {i} is complex: {mu}");
        assert!((mu.re - want).abs() <= 0.02 * want.abs(), "eigenvalue {i}: {} vs {want}", mu.re);
    }
    for v in &st.vectors {
        assert_ne!(dominant_mode(&frame.mesh, std::slice::from_ref(v)), (0, 0), "constant mode in the spectrum");
    }
}

#[test]
fn leading_modes_match_dispersion_inside_window() {
    check_against_dispersion(0.0, 0.0, 6);
}

#[test]
fn leading_modes_match_dispersion_for_negative_spontaneous_curvature() {
    check_against_dispersion(-1.0, 0.5, 6);
}
