//! Extreme eigenpairs of large symmetric operators and spectra of general
//! real matrices.

use nalgebra::{Complex, DMatrix, DVector};

use super::{fix_sign, lapack};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Operators up to this dimension are materialized and solved densely.
pub const DENSE_SPECTRAL_LIMIT: usize = 3000;

/// A symmetric linear map on ℝⁿ, known only through its action.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y ← A x`; `y` arrives with arbitrary contents.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// A dense matrix viewed as an operator.
#[derive(Debug, Clone)]
pub struct DenseOperator(pub DMatrix<f64>);

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.0.nrows();
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = self.0.column(j);
            for i in 0..n {
                y[i] += col[i] * xj;
            }
        }
    }
}

/// Eigenvalues in ascending order with matching unit eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    /// Largest residual `‖Av − λv‖₂` over the returned pairs.
    pub max_residual: f64,
    /// The operator-norm estimate the residuals were judged against.
    pub norm_estimate: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov dimension cap per run (also capped by the operator dimension).
    pub max_steps: usize,
    /// Ritz residual tolerance relative to the largest Ritz value.
    pub tol: f64,
    pub check_every: usize,
    /// Deflated re-runs used to recover eigenvalue multiplicities.
    pub max_rounds: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            max_steps: 2000,
            tol: 1e-11,
            check_every: 10,
            max_rounds: 12,
        }
    }
}

const RESIDUAL_TOL: f64 = 1e-8;

/// The `k` smallest eigenpairs of a symmetric operator.
///
/// Dimensions up to [`DENSE_SPECTRAL_LIMIT`] are solved densely; larger ones
/// with [`lanczos_smallest`] from a start vector drawn from `seed`.
pub fn smallest_eigenpairs(op: &dyn LinearOperator, k: usize, seed: u64) -> Result<Eigenpairs> {
    let n = op.dim();
    validate_k(n, k)?;
    if n <= DENSE_SPECTRAL_LIMIT {
        dense_smallest(op, k)
    } else {
        lanczos_smallest(op, k, seed, LanczosOptions::default())
    }
}

fn validate_k(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("operator has dimension 0".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("cannot request {k} eigenpairs of an operator on R^{n}")));
    }
    Ok(())
}

fn materialize(op: &dyn LinearOperator) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        m.set_column(j, &DVector::from_column_slice(&col));
        e[j] = 0.0;
    }
    (&m + m.transpose()) * 0.5
}

fn dense_smallest(op: &dyn LinearOperator, k: usize) -> Result<Eigenpairs> {
    smallest_dense_inner(op, materialize(op), k)
}

/// The `k` smallest eigenpairs of an explicit symmetric matrix, always dense.
pub fn dense_smallest_eigenpairs(m: DMatrix<f64>, k: usize) -> Result<Eigenpairs> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    validate_k(m.nrows(), k)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let m = (&m + m.transpose()) * 0.5;
    let op = DenseOperator(m);
    smallest_dense_inner(&op, op.0.clone(), k)
}

fn smallest_dense_inner(op: &dyn LinearOperator, m: DMatrix<f64>, k: usize) -> Result<Eigenpairs> {
    let norm_estimate = m.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
    let (values, mut vectors) = lapack::dsyevr_lowest(&m, k)?;
    for mut col in vectors.column_iter_mut() {
        fix_sign(col.as_mut_slice());
    }
    finish(op, values, vectors, norm_estimate)
}

fn finish(op: &dyn LinearOperator, values: Vec<f64>, vectors: DMatrix<f64>, norm_estimate: f64) -> Result<Eigenpairs> {
    let n = op.dim();
    let mut av = vec![0.0; n];
    let mut max_residual = 0.0f64;
    for (i, &lambda) in values.iter().enumerate() {
        let v = vectors.column(i);
        op.apply(v.as_slice(), &mut av);
        let r = av
            .iter()
            .zip(v.iter())
            .map(|(a, x)| (a - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(r);
    }
    if !(max_residual <= RESIDUAL_TOL * norm_estimate.max(f64::MIN_POSITIVE)) {
        return Err(Error::NoConvergence { residual: max_residual });
    }
    Ok(Eigenpairs {
        values,
        vectors,
        max_residual,
        norm_estimate,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Two passes of classical Gram–Schmidt against every basis vector.
fn orthogonalize(w: &mut [f64], bases: &[&[Vec<f64>]]) {
    for _ in 0..2 {
        for basis in bases {
            for q in basis.iter() {
                let c = dot(q, w);
                axpy(-c, q, w);
            }
        }
    }
}

fn random_unit_orthogonal(n: usize, rng: &mut SeededRng, bases: &[&[Vec<f64>]]) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        normalize(&mut v);
        orthogonalize(&mut v, bases);
        if normalize(&mut v) > 1e-8 {
            return Some(v);
        }
    }
    None
}

struct RunOutput {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    norm_estimate: f64,
}

/// One Lanczos run with full reorthogonalization, restricted to the
/// orthogonal complement of `locked`.
fn lanczos_run(
    op: &dyn LinearOperator,
    k: usize,
    locked: &[Vec<f64>],
    rng: &mut SeededRng,
    opts: &LanczosOptions,
) -> Result<RunOutput> {
    let n = op.dim();
    let available = n - locked.len();
    let k = k.min(available);
    let mut norm_estimate = 0.0f64;
    if k == 0 {
        return Ok(RunOutput { values: vec![], vectors: vec![], norm_estimate });
    }
    let steps_cap = opts.max_steps.max(k + 1).min(available);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut q = random_unit_orthogonal(n, rng, &[locked]).ok_or(Error::NoConvergence { residual: f64::NAN })?;
    let mut w = vec![0.0; n];
    let mut worst = f64::INFINITY;

    loop {
        op.apply(&q, &mut w);
        let alpha = dot(&q, &w);
        axpy(-alpha, &q, &mut w);
        if let (Some(prev), Some(&beta_prev)) = (basis.last(), betas.last()) {
            axpy(-beta_prev, prev, &mut w);
        }
        basis.push(std::mem::take(&mut q));
        alphas.push(alpha);
        orthogonalize(&mut w, &[locked, &basis]);
        let beta = dot(&w, &w).sqrt();
        let m = basis.len();
        norm_estimate = norm_estimate.max(alpha.abs() + beta);

        let exhausted = m == available;
        let invariant = beta <= 1e-12 * norm_estimate.max(f64::MIN_POSITIVE);
        let at_cap = m == steps_cap;
        let scheduled = m.is_multiple_of(opts.check_every);

        if m >= k && (exhausted || at_cap || (scheduled && !invariant)) {
            let (theta, s) = lapack::dstev(&alphas, &betas)?;
            let t_norm = theta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            norm_estimate = norm_estimate.max(t_norm);
            let resid: Vec<f64> = (0..k).map(|i| (beta * s[(m - 1, i)]).abs()).collect();
            worst = resid.iter().copied().fold(0.0, f64::max);
            let converged = exhausted || worst <= opts.tol * t_norm.max(f64::MIN_POSITIVE);
            if converged {
                let vectors = (0..k)
                    .map(|i| {
                        let mut v = vec![0.0; n];
                        for (j, b) in basis.iter().enumerate() {
                            axpy(s[(j, i)], b, &mut v);
                        }
                        normalize(&mut v);
                        v
                    })
                    .collect();
                return Ok(RunOutput {
                    values: theta[..k].to_vec(),
                    vectors,
                    norm_estimate,
                });
            }
            if at_cap {
                return Err(Error::NoConvergence { residual: worst });
            }
        }

        if invariant {
            // Krylov space closed up early; continue from a fresh direction.
            betas.push(0.0);
            q = match random_unit_orthogonal(n, rng, &[locked, &basis]) {
                Some(v) => v,
                None => return Err(Error::NoConvergence { residual: worst }),
            };
        } else {
            betas.push(beta);
            q = w.iter().map(|x| x / beta).collect();
        }
    }
}

/// The `k` smallest eigenpairs by Lanczos with full reorthogonalization.
///
/// A single Krylov sequence cannot see repeated eigenvalues, so converged
/// pairs are locked and the search is repeated in their orthogonal
/// complement until it finds nothing below the current k-th value.
pub fn lanczos_smallest(op: &dyn LinearOperator, k: usize, seed: u64, opts: LanczosOptions) -> Result<Eigenpairs> {
    let n = op.dim();
    validate_k(n, k)?;
    let mut rng = SeededRng::new(seed);
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut norm_estimate = 0.0f64;
    let mut verified = false;

    for _ in 0..opts.max_rounds {
        let vecs: Vec<Vec<f64>> = locked.iter().map(|(_, v)| v.clone()).collect();
        let run = lanczos_run(op, k, &vecs, &mut rng, &opts)?;
        norm_estimate = norm_estimate.max(run.norm_estimate);
        let slack = RESIDUAL_TOL * norm_estimate;
        if run.values.is_empty() || (locked.len() >= k && run.values[0] >= locked[k - 1].0 - slack) {
            verified = true;
            break;
        }
        locked.extend(run.values.into_iter().zip(run.vectors));
        locked.sort_by(|a, b| a.0.total_cmp(&b.0));
        locked.truncate(k);
    }
    if !verified {
        return Err(Error::NoConvergence { residual: f64::NAN });
    }

    let values: Vec<f64> = locked.iter().map(|(l, _)| *l).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, k);
    for (i, (_, v)) in locked.iter_mut().enumerate() {
        fix_sign(v);
        vectors.set_column(i, &DVector::from_column_slice(v));
    }
    finish(op, values, vectors, norm_estimate)
}

/// Eigenvalues of a general real square matrix, in LAPACK's order.
pub fn general_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidInput(format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    lapack::dgeev_values(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cycle_laplacian(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if (i + 1) % n == j || (j + 1) % n == i {
                -1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn diagonal_operator() {
        let op = DenseOperator(DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0])));
        let e = smallest_eigenpairs(&op, 2, 0).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 2.0, epsilon = 1e-12);
        let l = lanczos_smallest(&op, 2, 0, LanczosOptions::default()).unwrap();
        assert_abs_diff_eq!(l.values[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(l.values[1], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn path_laplacian_kernel() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let op = DenseOperator(m);
        for e in [
            smallest_eigenpairs(&op, 1, 0).unwrap(),
            lanczos_smallest(&op, 1, 5, LanczosOptions::default()).unwrap(),
        ] {
            assert_abs_diff_eq!(e.values[0], 0.0, epsilon = 1e-10);
            let s = 1.0 / 3f64.sqrt();
            for i in 0..3 {
                assert_abs_diff_eq!(e.vectors[(i, 0)], s, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn ten_cycle_multiplicity() {
        // Circulant spectrum 2 - 2cos(2πk/10); k = ±1 is a double eigenvalue.
        let lam1 = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / 10.0).cos();
        let op = DenseOperator(cycle_laplacian(10));
        for e in [
            smallest_eigenpairs(&op, 3, 0).unwrap(),
            lanczos_smallest(&op, 3, 11, LanczosOptions::default()).unwrap(),
        ] {
            assert_abs_diff_eq!(e.values[0], 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(e.values[1], lam1, epsilon = 1e-10);
            assert_abs_diff_eq!(e.values[2], lam1, epsilon = 1e-10);
        }
    }

    #[test]
    fn lanczos_is_deterministic() {
        let op = DenseOperator(cycle_laplacian(60));
        let a = lanczos_smallest(&op, 4, 9, LanczosOptions::default()).unwrap();
        let b = lanczos_smallest(&op, 4, 9, LanczosOptions::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn rejects_bad_k() {
        let op = DenseOperator(DMatrix::identity(3, 3));
        assert!(matches!(smallest_eigenpairs(&op, 0, 0), Err(Error::InvalidInput(_))));
        assert!(matches!(smallest_eigenpairs(&op, 4, 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn step_budget_exhaustion_reports_residual() {
        let op = DenseOperator(cycle_laplacian(200));
        let opts = LanczosOptions { max_steps: 12, ..Default::default() };
        match lanczos_smallest(&op, 3, 1, opts) {
            Err(Error::NoConvergence { residual }) => assert!(residual > 0.0),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn general_eigenvalues_of_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let mut ev = general_eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert_abs_diff_eq!(ev[0].re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[0].im, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1].im, 1.0, epsilon = 1e-14);
    }
}
