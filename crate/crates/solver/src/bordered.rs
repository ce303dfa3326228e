//! Sparse core systems with at most six dense border rows and columns.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::DMatrix;

use crate::error::SolverError;

pub const MAX_BORDER: usize = 6;
/// Relative conditioning below which the Schur complement counts as singular.
pub const SINGULAR_RATIO: f64 = 1e-9;
/// Backward error accepted from block elimination before falling back to a full factorization.
pub const RESIDUAL_TOL: f64 = 1e-10;

///   [ A  B ] [x]   [f]
///   [ C  D ] [y] = [g]
/// with sparse A (n×n), dense B (n×k), C (k×n), D (k×k).
#[derive(Debug, Clone)]
pub struct BorderedSystem {
    pub n: usize,
    pub core: Vec<Triplet<usize, usize, f64>>,
    pub border_columns: Vec<Vec<f64>>,
    pub border_rows: Vec<Vec<f64>>,
    pub corner: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elimination {
    Block,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BorderedSolution {
    /// [x | y], length n + k.
    pub solution: Vec<f64>,
    pub method: Elimination,
    /// ‖b − Kz‖∞ / (‖K‖∞‖z‖∞ + ‖b‖∞) for the full matrix K.
    pub backward_error: f64,
}

impl BorderedSystem {
    pub fn k(&self) -> usize {
        self.border_columns.len()
    }

    pub fn dim(&self) -> usize {
        self.n + self.k()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let (n, k) = (self.n, self.k());
        let bad = |m: String| Err(SolverError::Shape(m));
        if k > MAX_BORDER {
            return bad(format!("border width {k} exceeds {MAX_BORDER}"));
        }
        if self.border_rows.len() != k || self.corner.len() != k {
            return bad(format!("{} border rows and {} corner rows for {k} columns", self.border_rows.len(), self.corner.len()));
        }
        if self.border_columns.iter().chain(&self.border_rows).any(|v| v.len() != n) {
            return bad(format!("border vectors must have length {n}"));
        }
        if self.corner.iter().any(|r| r.len() != k) {
            return bad("corner block is not square".into());
        }
        if self.rhs.len() != n + k {
            return bad(format!("rhs has length {}, expected {}", self.rhs.len(), n + k));
        }
        if self.core.iter().any(|t| t.row >= n || t.col >= n) {
            return bad("core entry out of range".into());
        }
        Ok(())
    }

    /// Full matrix-vector product.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let (n, k) = (self.n, self.k());
        let mut out = vec![0.0; n + k];
        for t in &self.core {
            out[t.row] += t.val * z[t.col];
        }
        for (j, col) in self.border_columns.iter().enumerate() {
            let y = z[n + j];
            if y != 0.0 {
                out[..n].iter_mut().zip(col).for_each(|(o, c)| *o += c * y);
            }
        }
        for (i, row) in self.border_rows.iter().enumerate() {
            out[n + i] = dot(row, &z[..n]) + dot(&self.corner[i], &z[n..]);
        }
        out
    }

    fn inf_norm(&self) -> f64 {
        let (n, k) = (self.n, self.k());
        let mut rows = vec![0.0; n + k];
        for t in &self.core {
            rows[t.row] += t.val.abs();
        }
        for col in &self.border_columns {
            rows[..n].iter_mut().zip(col).for_each(|(r, c)| *r += c.abs());
        }
        for i in 0..k {
            rows[n + i] = self.border_rows[i].iter().chain(&self.corner[i]).map(|v| v.abs()).sum();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn backward_error(&self, z: &[f64]) -> f64 {
        let r = self.apply(z);
        let res = r.iter().zip(&self.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let denom = self.inf_norm() * sup(z) + sup(&self.rhs);
        if denom == 0.0 {
            0.0
        } else {
            res / denom
        }
    }

    /// Triplets of the whole (n+k)×(n+k) matrix.
    pub fn full_triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        let n = self.n;
        let mut t = self.core.clone();
        for (j, col) in self.border_columns.iter().enumerate() {
            t.extend(col.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| Triplet::new(i, n + j, v)));
        }
        for (i, row) in self.border_rows.iter().enumerate() {
            t.extend(row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, &v)| Triplet::new(n + i, j, v)));
            t.extend(self.corner[i].iter().enumerate().map(|(j, &v)| Triplet::new(n + i, n + j, v)));
        }
        t
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Sparse LU of a square triplet matrix.
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn factor(n: usize, triplets: &[Triplet<usize, usize, f64>]) -> Result<Self, SolverError> {
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, triplets)
            .map_err(|e| SolverError::LinearSolve(format!("assembly: {e:?}")))?;
        let lu = a.sp_lu().map_err(|e| SolverError::LinearSolve(format!("factorization: {e:?}")))?;
        Ok(Self { lu, n })
    }

    /// Solves for each column of `rhs` (column-major list of vectors).
    pub fn solve_many(&self, rhs: &[&[f64]]) -> Vec<Vec<f64>> {
        let mut m = Mat::<f64>::from_fn(self.n, rhs.len(), |i, j| rhs[j][i]);
        self.lu.solve_in_place(m.as_mut());
        (0..rhs.len()).map(|j| (0..self.n).map(|i| m[(i, j)]).collect()).collect()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.solve_many(&[rhs]).pop().unwrap()
    }
}

/// Block elimination through the Schur complement D − C·A⁻¹·B, refined
/// iteratively; falls back to factoring the whole matrix if the core solve is
/// unusable. A singular Schur complement with a healthy core is reported
/// rather than bypassed: it signals nearly dependent constraints.
pub fn bordered_solve(sys: &BorderedSystem) -> Result<BorderedSolution, SolverError> {
    sys.validate()?;
    match block_solve(sys) {
        Ok(sol) => Ok(sol),
        Err(e @ SolverError::SingularBorder { .. }) => Err(e),
        Err(_) => solve_full(sys),
    }
}

pub fn solve_full(sys: &BorderedSystem) -> Result<BorderedSolution, SolverError> {
    sys.validate()?;
    let lu = SparseLu::factor(sys.dim(), &sys.full_triplets())?;
    let mut z = lu.solve(&sys.rhs);
    refine(sys, &mut z, |r| Ok(lu.solve(r)))?;
    let backward_error = sys.backward_error(&z);
    if !backward_error.is_finite() || backward_error > RESIDUAL_TOL {
        return Err(SolverError::LinearSolve(format!("full factorization backward error {backward_error:.3e}")));
    }
    Ok(BorderedSolution { solution: z, method: Elimination::Full, backward_error })
}

fn refine(
    sys: &BorderedSystem,
    z: &mut [f64],
    solve: impl Fn(&[f64]) -> Result<Vec<f64>, SolverError>,
) -> Result<(), SolverError> {
    for _ in 0..3 {
        if sys.backward_error(z) <= 0.01 * RESIDUAL_TOL {
            break;
        }
        let az = sys.apply(z);
        let r: Vec<f64> = sys.rhs.iter().zip(&az).map(|(b, a)| b - a).collect();
        let dz = solve(&r)?;
        z.iter_mut().zip(&dz).for_each(|(a, d)| *a += d);
    }
    Ok(())
}

struct Schur {
    lu: SparseLu,
    /// A⁻¹B, one vector per border column.
    ainv_b: Vec<Vec<f64>>,
    s: DMatrix<f64>,
}

impl Schur {
    fn new(sys: &BorderedSystem) -> Result<Self, SolverError> {
        let (n, k) = (sys.n, sys.k());
        let lu = SparseLu::factor(n, &sys.core)?;
        let cols: Vec<&[f64]> = sys.border_columns.iter().map(|c| c.as_slice()).collect();
        let ainv_b = if k > 0 { lu.solve_many(&cols) } else { Vec::new() };
        if ainv_b.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SolverError::LinearSolve("core solve produced non-finite values".into()));
        }
        let mut s = DMatrix::zeros(k, k);
        let mut scale = DMatrix::zeros(k, k);
        for i in 0..k {
            let cn = dot(&sys.border_rows[i], &sys.border_rows[i]).sqrt();
            for j in 0..k {
                s[(i, j)] = sys.corner[i][j] - dot(&sys.border_rows[i], &ainv_b[j]);
                scale[(i, j)] = cn * dot(&ainv_b[j], &ainv_b[j]).sqrt() + sys.corner[i][j].abs();
            }
        }
        if k > 0 {
            // Row/column equilibration before judging conditioning.
            let mut scaled = s.clone();
            for i in 0..k {
                let rmax = (0..k).map(|j| scale[(i, j)]).fold(0.0, f64::max);
                if rmax > 0.0 {
                    for j in 0..k {
                        scaled[(i, j)] /= rmax;
                    }
                }
            }
            for j in 0..k {
                let cmax = (0..k).map(|i| scaled[(i, j)].abs()).fold(0.0, f64::max);
                if cmax > 0.0 {
                    for i in 0..k {
                        scaled[(i, j)] /= cmax;
                    }
                }
            }
            let sv = scaled.singular_values();
            let (smin, smax) = (sv.min(), sv.max());
            let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
            if !(ratio > SINGULAR_RATIO) {
                return Err(SolverError::SingularBorder { ratio });
            }
        }
        Ok(Self { lu, ainv_b, s })
    }

    fn solve(&self, sys: &BorderedSystem, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        let (n, k) = (sys.n, sys.k());
        let ainv_f = self.lu.solve(&rhs[..n]);
        let g = nalgebra::DVector::from_fn(k, |i, _| rhs[n + i] - dot(&sys.border_rows[i], &ainv_f));
        let y = if k > 0 {
            self.s
                .clone()
                .lu()
                .solve(&g)
                .ok_or(SolverError::SingularBorder { ratio: 0.0 })?
        } else {
            g
        };
        let mut z = ainv_f;
        for (j, col) in self.ainv_b.iter().enumerate() {
            z.iter_mut().zip(col).for_each(|(a, c)| *a -= c * y[j]);
        }
        z.extend(y.iter());
        if z.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::LinearSolve("block elimination produced non-finite values".into()));
        }
        Ok(z)
    }
}

fn block_solve(sys: &BorderedSystem) -> Result<BorderedSolution, SolverError> {
    let schur = Schur::new(sys)?;
    let mut z = schur.solve(sys, &sys.rhs)?;
    refine(sys, &mut z, |r| schur.solve(sys, r))?;
    let backward_error = sys.backward_error(&z);
    if !(backward_error <= RESIDUAL_TOL) {
        return Err(SolverError::LinearSolve(format!("block elimination backward error {backward_error:.3e}")));
    }
    Ok(BorderedSolution { solution: z, method: Elimination::Block, backward_error })
}
