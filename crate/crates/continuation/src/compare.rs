use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

use crate::branch::BranchState;

/// Slope d|c|²/dλ₂ at onset from (λ₂, |c|²) samples, by least squares on
/// λ₂ = a + p·|c|² + q·|c|⁴ so that the quartic bend of the branch does not
/// leak into the onset slope. Needs at least four samples.
pub fn onset_slope(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < 4 {
        return None;
    }
    let a = Mat::<f64>::from_fn(samples.len(), 3, |i, j| samples[i].1.powi(j as i32));
    let b = Mat::<f64>::from_fn(samples.len(), 1, |i, _| samples[i].0);
    let x = a.qr().solve_lstsq(&b);
    let p = x[(1, 0)];
    (p != 0.0 && p.is_finite()).then(|| 1.0 / p)
}

/// (λ₂, |c|²) along the states with |c| ≤ max_amp, c the tracked amplitude.
pub fn amplitude_samples(states: &[BranchState], max_amp: f64) -> Vec<(f64, f64)> {
    states
        .iter()
        .filter(|s| s.amplitude.norm() <= max_amp)
        .map(|s| (s.lambda.1, s.amplitude.norm_sqr()))
        .collect()
}
