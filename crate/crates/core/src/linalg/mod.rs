//! Symmetric eigendecomposition and the two spectral inverses built on it.
//!
//! Small matrices (the p x p local covariances) go through nalgebra's
//! symmetric QR; anything larger than [`SMALL_DENSE_LIMIT`] is handed to
//! LAPACK. Eigenvalues are always reported in non-increasing order and every
//! eigenvector is signed so that its largest-magnitude entry is positive.

mod eigs;
pub(crate) mod lapack;

pub use eigs::{
    dense_smallest_eigenpairs, general_eigenvalues, lanczos_smallest, smallest_eigenpairs, DenseOperator, Eigenpairs,
    LanczosOptions, LinearOperator, DENSE_SPECTRAL_LIMIT,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Matrices up to this dimension are decomposed in pure Rust.
pub const SMALL_DENSE_LIMIT: usize = 32;

/// A real symmetric matrix. Construction symmetrizes the input as `(A + Aᵀ)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("symmetric matrix must be non-empty".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(SymMatrix(sym))
    }

    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn scaled(&self, factor: f64) -> SymMatrix {
        SymMatrix(&self.0 * factor)
    }
}

/// Sorted eigendecomposition `A = U Λ Uᵀ` with `λ₁ ≥ … ≥ λ_p`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: DVector<f64>,
    /// Columns are the unit eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    /// Number of eigenvalues above the rank threshold.
    pub rank: usize,
}

impl SymEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Σ_{i<count} f(λ_i) u_i u_iᵀ`.
    fn spectral_sum(&self, count: usize, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let p = self.dim();
        let mut out = DMatrix::<f64>::zeros(p, p);
        for i in 0..count {
            let u = self.eigenvectors.column(i);
            out.ger(f(self.eigenvalues[i]), &u, &u, 1.0);
        }
        out
    }
}

/// Relative rank tolerance used when the caller passes `None`: `dim · ε_machine`.
pub fn default_rank_tol(dim: usize) -> f64 {
    dim as f64 * f64::EPSILON
}

/// Decomposes `a`. The rank counts eigenvalues strictly above
/// `rank_tol · max(1, λ₁)`; `rank_tol` defaults to [`default_rank_tol`].
pub fn sym_eig(a: &SymMatrix, rank_tol: Option<f64>) -> Result<SymEig> {
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(a.dim()));
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput(format!("rank tolerance must be finite and >= 0, got {tol}")));
    }
    let n = a.dim();
    let (values, vectors) = if n <= SMALL_DENSE_LIMIT {
        let eig = SymmetricEigen::try_new(a.as_matrix().clone(), f64::EPSILON, 0)
            .ok_or(Error::NoConvergence { residual: f64::NAN })?;
        (eig.eigenvalues, eig.eigenvectors)
    } else {
        lapack::dsyevd(a.as_matrix())?
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src).into_owned();
        fix_sign(col.as_mut_slice());
        eigenvectors.set_column(dst, &col);
    }

    let lambda_max = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = tol * lambda_max.max(1.0);
    let rank = eigenvalues.iter().filter(|&&v| v > threshold).count();
    Ok(SymEig { eigenvalues, eigenvectors, rank })
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// The α-truncated inverse `Σ_{i≤α} λ_i⁻¹ u_i u_iᵀ`.
pub fn truncated_inverse(a: &SymMatrix, alpha: usize) -> Result<SymMatrix> {
    let eig = sym_eig(a, None)?;
    truncated_inverse_of(&eig, alpha)
}

/// As [`truncated_inverse`], reusing a decomposition.
pub fn truncated_inverse_of(eig: &SymEig, alpha: usize) -> Result<SymMatrix> {
    if alpha < 1 {
        return Err(Error::InvalidInput("truncation order must be at least 1".into()));
    }
    if alpha > eig.rank {
        return Err(Error::RankExceeded { alpha, rank: eig.rank });
    }
    SymMatrix::new(eig.spectral_sum(alpha, |l| 1.0 / l))
}

/// The c-regularized inverse `Σ_{i≤rank} (λ_i + c)⁻¹ u_i u_iᵀ`; zero modes are annihilated.
pub fn regularized_inverse(a: &SymMatrix, c: f64) -> Result<SymMatrix> {
    let eig = sym_eig(a, None)?;
    regularized_inverse_of(&eig, c)
}

/// As [`regularized_inverse`], reusing a decomposition.
pub fn regularized_inverse_of(eig: &SymEig, c: f64) -> Result<SymMatrix> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!("regularization must be positive, got {c}")));
    }
    SymMatrix::new(eig.spectral_sum(eig.rank, |l| 1.0 / (l + c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax()
    }

    #[test]
    fn diagonal_decomposition() {
        let a = SymMatrix::from_diagonal(&[4.0, 1.0, 0.0]).unwrap();
        let eig = sym_eig(&a, None).unwrap();
        assert_eq!(eig.eigenvalues.as_slice(), &[4.0, 1.0, 0.0]);
        assert_eq!(eig.rank, 2);
    }

    #[test]
    fn identity_decomposition() {
        let eig = sym_eig(&SymMatrix::identity(3), None).unwrap();
        for v in eig.eigenvalues.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        assert_eq!(eig.rank, 3);
        let u = &eig.eigenvectors;
        assert!(max_diff(&(u.transpose() * u), &DMatrix::identity(3, 3)) < 1e-12);
    }

    #[test]
    fn two_by_two_by_hand() {
        // det([[2-λ,1],[1,2-λ]]) = (2-λ)² - 1 ⇒ λ ∈ {3, 1}
        let a = SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let eig = sym_eig(&a, None).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-13);
        let s = 1.0 / 2f64.sqrt();
        let u0 = eig.eigenvectors.column(0);
        let u1 = eig.eigenvectors.column(1);
        assert_abs_diff_eq!(u0[0].abs(), s, epsilon = 1e-13);
        assert_abs_diff_eq!(u0[1].abs(), s, epsilon = 1e-13);
        assert!(u0[0] * u0[1] > 0.0);
        assert!(u1[0] * u1[1] < 0.0);
    }

    #[test]
    fn truncated_examples() {
        let a = SymMatrix::from_diagonal(&[4.0, 1.0, 0.0]).unwrap();
        let t = truncated_inverse(&a, 2).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 1.0, 0.0]));
        assert!(max_diff(t.as_matrix(), &expect) < 1e-14);

        let t = truncated_inverse(&SymMatrix::identity(3), 3).unwrap();
        assert!(max_diff(t.as_matrix(), &DMatrix::identity(3, 3)) < 1e-14);

        // (1/3) v vᵀ with v = (1,1)/√2
        let a = SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let t = truncated_inverse(&a, 1).unwrap();
        let expect = DMatrix::from_element(2, 2, 1.0 / 6.0);
        assert!(max_diff(t.as_matrix(), &expect) < 1e-14);
    }

    #[test]
    fn truncated_rejects_bad_orders() {
        let a = SymMatrix::from_diagonal(&[4.0, 1.0, 0.0]).unwrap();
        assert!(matches!(truncated_inverse(&a, 3), Err(Error::RankExceeded { alpha: 3, rank: 2 })));
        assert!(matches!(truncated_inverse(&a, 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn regularized_examples() {
        let a = SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let r = regularized_inverse(&a, 1.0).unwrap();
        assert!(max_diff(r.as_matrix(), &DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.0]))) < 1e-15);

        let r = regularized_inverse(&SymMatrix::identity(2), 1.0).unwrap();
        assert!(max_diff(r.as_matrix(), &(DMatrix::identity(2, 2) * 0.5)) < 1e-15);

        let a = SymMatrix::from_diagonal(&[4.0, 1.0, 0.0]).unwrap();
        let r = regularized_inverse(&a, 1e-9).unwrap();
        let t = truncated_inverse(&a, 2).unwrap();
        assert!(max_diff(r.as_matrix(), t.as_matrix()) < 1e-8);

        assert!(matches!(regularized_inverse(&a, 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(regularized_inverse(&a, -1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn construction_symmetrizes() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let s = SymMatrix::new(m).unwrap();
        assert_eq!(s.as_matrix()[(0, 1)], 1.0);
        assert_eq!(s.as_matrix()[(1, 0)], 1.0);
    }

    #[test]
    fn lapack_and_nalgebra_paths_agree() {
        // A 40x40 matrix takes the LAPACK path; compare with nalgebra directly.
        let n = 40;
        let m = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + if i == j { 3.0 } else { 0.0 });
        let a = SymMatrix::new(m).unwrap();
        let eig = sym_eig(&a, None).unwrap();
        let mut reference: Vec<f64> = SymmetricEigen::new(a.as_matrix().clone()).eigenvalues.iter().copied().collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in eig.eigenvalues.iter().zip(&reference) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-10);
        }
        let u = &eig.eigenvectors;
        assert!(max_diff(&(u.transpose() * u), &DMatrix::identity(n, n)) < 1e-10);
        let recon = u * DMatrix::from_diagonal(&eig.eigenvalues) * u.transpose();
        assert!(max_diff(&recon, a.as_matrix()) < 1e-9 * (1.0 + a.max_abs()));
    }

    #[test]
    fn sign_convention() {
        let mut v = [0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, [-0.1, 0.9, -0.3]);
    }
}
