//! Leading eigenvalues of J·z = μ·B·z, with B the mass on the (eq2, u) block,
//! by shift-invert Arnoldi.

use faer::sparse::Triplet;
use faer::Mat;
use num_complex::Complex64;
use tubelab_solver::bordered::SparseLu;
use tubelab_solver::BorderedSystem;

use crate::error::ContinuationError;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: Complex64,
    /// Full-length eigenvector, phase-normalized so its largest entry is real.
    pub vector: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    pub n_eigs: usize,
    /// Start above the expected spectrum so that the eigenvalues closest to
    /// the shift are the ones with largest real part.
    pub shift: f64,
    pub krylov_start: usize,
    pub krylov_max: usize,
    pub tol: f64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self { n_eigs: 12, shift: 0.5, krylov_start: 60, krylov_max: 480, tol: 1e-9 }
    }
}

/// Eigenpairs of the pencil (J, B) where B·z places mass[i]·z[i] on row
/// mass_row_offset + i. Sorted by decreasing real part.
pub fn leading_eigenpairs(
    sys: &BorderedSystem,
    mass: &[f64],
    mass_row_offset: usize,
    opts: &ArnoldiOptions,
) -> Result<Vec<EigenPair>, ContinuationError> {
    let mut shift = opts.shift;
    for _ in 0..6 {
        let pairs = shifted(sys, mass, mass_row_offset, shift, opts)?;
        let top = pairs.first().map(|p| p.value.re).unwrap_or(f64::NEG_INFINITY);
        // The ordering argument needs the whole spectrum left of the shift.
        if top < shift - 0.05 * shift.abs().max(0.1) {
            return Ok(pairs);
        }
        shift = 2.0 * top.abs() + 1.0;
    }
    Err(ContinuationError::EigenBreakdown("could not place the shift above the spectrum".into()))
}

fn shifted(
    sys: &BorderedSystem,
    mass: &[f64],
    offset: usize,
    shift: f64,
    opts: &ArnoldiOptions,
) -> Result<Vec<EigenPair>, ContinuationError> {
    let dim = sys.dim();
    let mut trip = sys.full_triplets();
    trip.extend(mass.iter().enumerate().map(|(i, &m)| Triplet::new(offset + i, i, -shift * m)));
    let lu = SparseLu::factor(dim, &trip).map_err(|e| ContinuationError::EigenBreakdown(e.to_string()))?;
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut bv = vec![0.0; dim];
        for (i, &m) in mass.iter().enumerate() {
            bv[offset + i] = m * v[i];
        }
        lu.solve(&bv)
    };
    let mut m = opts.krylov_start.min(dim.saturating_sub(1)).max(2);
    loop {
        let (pairs, converged_enough) = arnoldi(&apply, dim, m, shift, opts)?;
        if converged_enough || m >= opts.krylov_max.min(dim - 1) {
            return Ok(pairs);
        }
        m = (2 * m).min(opts.krylov_max).min(dim - 1);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exactly degenerate pairs (cos/sin) need a block start to be resolved.
pub const BLOCK: usize = 4;

fn arnoldi(
    apply: &impl Fn(&[f64]) -> Vec<f64>,
    dim: usize,
    m: usize,
    shift: f64,
    opts: &ArnoldiOptions,
) -> Result<(Vec<EigenPair>, bool), ContinuationError> {
    let b = BLOCK.min(dim / 2).max(1);
    let m = m.max(2 * b).min(dim - b);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + b);
    // Deterministic, mutually independent start vectors.
    for s in 0..b {
        let start: Vec<f64> = (0..dim).map(|i| 1.0 + 0.5 * ((i as f64) * (0.731 + 0.37 * s as f64) + s as f64).sin()).collect();
        let mut v = apply(&start);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = dot(&v, &v).sqrt();
        if !(nrm > 1e-300) || !nrm.is_finite() {
            return Err(ContinuationError::EigenBreakdown("start block is rank deficient".into()));
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        basis.push(v);
    }
    // hess[(i, j)] = ⟨q_i, A q_j⟩ for i < j + b + 1.
    let mut hess = Mat::<f64>::zeros(m + b, m);
    let mut steps = m;
    for j in 0..m {
        let mut w = apply(&basis[j]);
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(&w, q);
                hess[(i, j)] += c;
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = dot(&w, &w).sqrt();
        if !beta.is_finite() {
            return Err(ContinuationError::EigenBreakdown("non-finite Krylov vector".into()));
        }
        if beta < 1e-13 * hess[(j, j)].abs().max(1e-300) {
            // Invariant subspace found; stop with what is spanned.
            steps = j + 1;
            break;
        }
        hess[(j + b, j)] = beta;
        w.iter_mut().for_each(|x| *x /= beta);
        basis.push(w);
    }
    let h = Mat::<f64>::from_fn(steps, steps, |i, j| hess[(i, j)]);
    let evd = h.eigen().map_err(|e| ContinuationError::EigenBreakdown(format!("{e:?}")))?;
    let s = evd.S();
    let y = evd.U();
    let mut pairs = Vec::new();
    let mut n_conv = 0;
    for k in 0..steps {
        let theta: Complex64 = s[k];
        if theta.norm() < 1e-12 {
            continue;
        }
        let ynorm: f64 = (0..steps).map(|i| y[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        // ‖A·V·y − θ·V·y‖ comes only from the rows below the projected block.
        let resid: f64 = (steps..(steps + b).min(hess.nrows()))
            .map(|i| {
                let r: Complex64 = (0..steps).map(|j| y[(j, k)] * hess[(i, j)]).sum();
                r.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
            / ynorm;
        if resid > opts.tol * theta.norm() {
            continue;
        }
        n_conv += 1;
        let mut vec = vec![Complex64::new(0.0, 0.0); dim];
        for (i, q) in basis.iter().enumerate().take(steps) {
            let c = y[(i, k)];
            vec.iter_mut().zip(q).for_each(|(x, qi)| *x += c * qi);
        }
        let (imax, _) = vec.iter().enumerate().fold((0, 0.0), |acc, (i, x)| if x.norm() > acc.1 { (i, x.norm()) } else { acc });
        let phase = vec[imax] / vec[imax].norm();
        vec.iter_mut().for_each(|x| *x /= phase);
        pairs.push(EigenPair { value: Complex64::new(shift, 0.0) + 1.0 / theta, vector: vec });
    }
    pairs.sort_by(|a, b| b.value.re.total_cmp(&a.value.re).then(b.value.im.total_cmp(&a.value.im)));
    let enough = n_conv >= opts.n_eigs + 6 || steps < m;
    Ok((pairs, enough))
}
