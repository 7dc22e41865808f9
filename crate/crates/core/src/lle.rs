//! Barycentric (LLE) weights, the sparse LLE matrix, spectral embedding,
//! Laplacian eigenvalue recovery, and a diffusion-maps baseline.
//!
//! Weights are computed in covariance form: with `C = G Gᵀ` and a spectral
//! inverse `S` of `C` (regularized or truncated),
//!
//! ```text
//! T = S G 1,    w = (1 − Gᵀ T) / (N − 1ᵀ Gᵀ T)
//! ```
//!
//! which only needs a p × p eigendecomposition per point.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::covariance::{local_data_matrix, LocalDataMatrix};
use crate::error::{Error, Result};
use crate::linalg::{
    dense_smallest_eigenpairs, general_eigenvalues, regularized_inverse_of, smallest_eigenpairs, sym_eig,
    truncated_inverse_of, LinearOperator, SymEig, SymMatrix, DENSE_SPECTRAL_LIMIT,
};
use crate::pointcloud::{knn_neighbors, radius_neighbors, PointCloud};

/// Relative size of the weight denominator below which a row is singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Default relative regularization: `c = 10⁻³ · trace(G Gᵀ) / N`.
pub const DEFAULT_TRACE_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub center: usize,
    /// Neighbor indices, ascending.
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl WeightRow {
    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// How `c` is chosen for regularized weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    Fixed(f64),
    /// `c = factor · trace(G Gᵀ) / N`, per neighborhood.
    TraceScaled(f64),
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::TraceScaled(DEFAULT_TRACE_FACTOR)
    }
}

impl Regularization {
    pub fn value_for(&self, g: &LocalDataMatrix) -> f64 {
        match *self {
            Regularization::Fixed(c) => c,
            Regularization::TraceScaled(f) => f * g.columns.norm_squared() / g.count() as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightVariant {
    /// Classic LLE with a regularized inverse.
    Regularized(Regularization),
    /// Truncated inverse of order `d`.
    Truncated(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighborScale {
    Radius(f64),
    Knn(usize),
}

fn weights_from_inverse(g: &LocalDataMatrix, inverse: &SymMatrix) -> Result<WeightRow> {
    let n = g.count();
    let g1 = g.offset_sum();
    let t = inverse.as_matrix() * &g1;
    let gt_t = g.columns.transpose() * &t;
    let denominator = n as f64 - g1.dot(&t);
    if !(denominator.abs() >= SINGULAR_TOL * n as f64) {
        return Err(Error::SingularWeights { center: g.center, denominator });
    }
    Ok(WeightRow {
        center: g.center,
        indices: g.neighborhood.indices.clone(),
        weights: gt_t.iter().map(|v| (1.0 - v) / denominator).collect(),
    })
}

fn single_neighbor_row(g: &LocalDataMatrix) -> WeightRow {
    WeightRow {
        center: g.center,
        indices: g.neighborhood.indices.clone(),
        weights: vec![1.0],
    }
}

fn covariance_eig(g: &LocalDataMatrix) -> Result<SymEig> {
    sym_eig(&SymMatrix::new(&g.columns * g.columns.transpose())?, None)
}

/// Regularized barycentric weights of the center in terms of its neighbors.
pub fn lle_weights(g: &LocalDataMatrix, c: f64) -> Result<WeightRow> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!("regularization must be positive, got {c}")));
    }
    if g.count() == 1 {
        return Ok(single_neighbor_row(g));
    }
    let eig = covariance_eig(g)?;
    weights_from_inverse(g, &regularized_inverse_of(&eig, c)?)
}

/// Weights with the covariance inverted only on its top-`d` eigenspace.
pub fn ldr_lle_weights(g: &LocalDataMatrix, d: usize) -> Result<WeightRow> {
    let eig = covariance_eig(g)?;
    let inverse = truncated_inverse_of(&eig, d)?;
    // A single neighbor pins the only affine weight to 1; the formula is 0/0 there.
    if g.count() == 1 {
        return Ok(single_neighbor_row(g));
    }
    weights_from_inverse(g, &inverse)
}

/// Row-compressed n × n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LLEMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl LLEMatrix {
    pub fn from_rows(n: usize, rows: &[WeightRow]) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::InvalidInput(format!("expected {n} weight rows, got {}", rows.len())));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, row) in rows.iter().enumerate() {
            if row.center != i || row.indices.len() != row.weights.len() {
                return Err(Error::InvalidInput(format!("malformed weight row at position {i}")));
            }
            for (&j, &w) in row.indices.iter().zip(&row.weights) {
                if j >= n || j == i {
                    return Err(Error::InvalidInput(format!("row {i} references column {j}")));
                }
                col_idx.push(j);
                values.push(w);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(LLEMatrix { n, row_ptr, col_idx, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `y ← (I − W) x`.
    pub fn apply_residual(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            y[i] = x[i] - cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum::<f64>();
        }
    }

    /// `y ← (I − W)ᵀ x`.
    pub fn apply_residual_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] -= v * x[i];
            }
        }
    }
}

/// One weight row per point, computed independently.
pub fn assemble_lle_matrix(cloud: &PointCloud, scale: NeighborScale, variant: WeightVariant) -> Result<LLEMatrix> {
    let n = cloud.len();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let nbrs = match scale {
                NeighborScale::Radius(h) => radius_neighbors(cloud, i, h)?,
                NeighborScale::Knn(k) => knn_neighbors(cloud, i, k)?,
            };
            if nbrs.is_empty() {
                return Err(Error::IsolatedPoint(i));
            }
            let g = local_data_matrix(cloud, &nbrs)?;
            match variant {
                WeightVariant::Regularized(reg) => lle_weights(&g, reg.value_for(&g)),
                WeightVariant::Truncated(d) => ldr_lle_weights(&g, d),
            }
            .map_err(|e| e.at(i))
        })
        .collect::<Result<Vec<_>>>()?;
    LLEMatrix::from_rows(n, &rows)
}

/// `(I − W)ᵀ (I − W)` applied as two sparse products.
struct NormalOperator<'a>(&'a LLEMatrix);

impl LinearOperator for NormalOperator<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = vec![0.0; x.len()];
        self.0.apply_residual(x, &mut tmp);
        self.0.apply_residual_transpose(&tmp, y);
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingResult {
    /// n × ℓ, one eigenvector per column, ascending eigenvalue.
    pub coordinates: DMatrix<f64>,
    pub spectrum: Vec<f64>,
    /// Column holding the near-constant eigenvector, if one was returned.
    pub trivial_column: Option<usize>,
    pub max_residual: f64,
}

impl EmbeddingResult {
    /// The columns other than the near-constant one.
    pub fn nontrivial_coordinates(&self) -> DMatrix<f64> {
        let keep: Vec<usize> = (0..self.coordinates.ncols()).filter(|&c| Some(c) != self.trivial_column).collect();
        self.coordinates.select_columns(&keep)
    }
}

/// Overlap with the normalized constant vector above which a column is flagged.
const CONSTANT_OVERLAP: f64 = 0.99;

/// Eigenvectors of `(I − W)ᵀ(I − W)` for its `ell` smallest eigenvalues.
pub fn embed(w: &LLEMatrix, ell: usize, seed: u64) -> Result<EmbeddingResult> {
    let n = w.dim();
    if ell == 0 || ell >= n {
        return Err(Error::InvalidInput(format!("embedding dimension must be in 1..{n}, got {ell}")));
    }
    let pairs = smallest_eigenpairs(&NormalOperator(w), ell, seed)?;
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let trivial_column = (0..ell)
        .map(|c| (c, pairs.vectors.column(c).sum().abs() * inv_sqrt_n))
        .filter(|&(_, overlap)| overlap > CONSTANT_OVERLAP)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(c, _)| c);
    Ok(EmbeddingResult {
        coordinates: pairs.vectors,
        spectrum: pairs.values,
        trivial_column,
        max_residual: pairs.max_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSpectrum {
    /// Real parts, ascending.
    pub values: Vec<f64>,
    /// Largest `|Im λ|` among the returned eigenvalues.
    pub max_imag: f64,
}

fn laplacian_factor(h: f64, d: usize) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}")));
    }
    if d < 1 {
        return Err(Error::InvalidInput("intrinsic dimension must be at least 1".into()));
    }
    Ok(2.0 * (d + 2) as f64 / (h * h))
}

/// The `k` eigenvalues of `(2(d+2)/h²)(I − W)` with smallest real part.
///
/// `I − W` is not symmetric, so this is a dense general eigensolve at any
/// size; real parts are returned and the largest imaginary part reported.
pub fn laplacian_eigenvalues(w: &LLEMatrix, h: f64, d: usize, k: usize) -> Result<LaplacianSpectrum> {
    let factor = laplacian_factor(h, d)?;
    let n = w.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("cannot request {k} eigenvalues of a {n}-point operator")));
    }
    let m = (DMatrix::identity(n, n) - w.to_dense()) * factor;
    let mut eigs = general_eigenvalues(&m)?;
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    eigs.truncate(k);
    Ok(LaplacianSpectrum {
        values: eigs.iter().map(|z| z.re).collect(),
        max_imag: eigs.iter().fold(0.0, |m, z| m.max(z.im.abs())),
    })
}

/// Alternative route: the `k` smallest singular values of `(2(d+2)/h²)(I − W)`,
/// from the eigenvalues of `(I − W)ᵀ(I − W)`.
pub fn laplacian_singular_values(w: &LLEMatrix, h: f64, d: usize, k: usize, seed: u64) -> Result<Vec<f64>> {
    let factor = laplacian_factor(h, d)?;
    let pairs = smallest_eigenpairs(&NormalOperator(w), k, seed)?;
    Ok(pairs.values.iter().map(|&v| factor * v.max(0.0).sqrt()).collect())
}

/// Kernel entries further than this many bandwidths apart are dropped in
/// the sparse path; `exp(−36)` is below double-precision resolution.
const DM_CUTOFF: f64 = 6.0;

/// Symmetric conjugate `D^{-1/2} K_a D^{-1/2}` of the diffusion Markov matrix,
/// stored row-wise as `(column, value)` lists.
fn diffusion_kernel(cloud: &PointCloud, h: f64, a: f64, cutoff: Option<f64>) -> Vec<Vec<(usize, f64)>> {
    let n = cloud.len();
    let h2 = h * h;
    let limit = cutoff.map(|c| (c * h) * (c * h));
    let kernel: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter_map(|j| {
                    let r2 = cloud.distance_sq(i, j);
                    match limit {
                        Some(l) if r2 > l => None,
                        _ => Some((j, (-r2 / h2).exp())),
                    }
                })
                .collect()
        })
        .collect();
    let q: Vec<f64> = kernel.iter().map(|row| row.iter().map(|e| e.1).sum::<f64>().powf(a)).collect();
    let ka: Vec<Vec<(usize, f64)>> = kernel
        .into_iter()
        .enumerate()
        .map(|(i, row)| row.into_iter().map(|(j, v)| (j, v / (q[i] * q[j]))).collect())
        .collect();
    let dsqrt: Vec<f64> = ka.iter().map(|row| row.iter().map(|e| e.1).sum::<f64>().sqrt()).collect();
    ka.into_iter()
        .enumerate()
        .map(|(i, row)| row.into_iter().map(|(j, v)| (j, v / (dsqrt[i] * dsqrt[j]))).collect())
        .collect()
}

/// `I − S` for a sparse symmetric `S`.
struct ShiftedSparse(Vec<Vec<(usize, f64)>>);

impl LinearOperator for ShiftedSparse {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = x[i] - self.0[i].iter().map(|&(j, v)| v * x[j]).sum::<f64>();
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSpectrum {
    /// `(1 − μ)·4/h²`, ascending.
    pub values: Vec<f64>,
    /// Markov eigenvalues `μ`, descending.
    pub markov: Vec<f64>,
}

/// Laplacian estimates from the `a`-normalized diffusion-maps Markov matrix
/// with Gaussian kernel `exp(−‖x_i − x_j‖² / h²)`.
pub fn diffusion_maps_eigenvalues(cloud: &PointCloud, h: f64, a: f64, k: usize, seed: u64) -> Result<DiffusionSpectrum> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}")));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidInput(format!("normalization exponent must lie in [0, 1], got {a}")));
    }
    let n = cloud.len();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("cannot request {k} eigenvalues of a {n}-point operator")));
    }
    let pairs = if n <= DENSE_SPECTRAL_LIMIT {
        let s = diffusion_kernel(cloud, h, a, None);
        let m = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - s[i][j].1);
        dense_smallest_eigenpairs(m, k)?
    } else {
        smallest_eigenpairs(&ShiftedSparse(diffusion_kernel(cloud, h, a, Some(DM_CUTOFF))), k, seed)?
    };
    let scale = 4.0 / (h * h);
    Ok(DiffusionSpectrum {
        values: pairs.values.iter().map(|&v| v * scale).collect(),
        markov: pairs.values.iter().map(|&v| 1.0 - v).collect(),
    })
}

/// `x` reconstructed from its weight row: `Σ_j w_j x_j`.
pub fn reconstruct(cloud: &PointCloud, row: &WeightRow) -> DVector<f64> {
    let mut out = DVector::zeros(cloud.dim());
    for (&j, &w) in row.indices.iter().zip(&row.weights) {
        out += cloud.point_vector(j) * w;
    }
    out
}
