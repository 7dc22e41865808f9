//! Local data matrices, local covariances and the tangent/normal frames
//! read off their eigenvectors.
//!
//! Two scalings coexist and are kept apart by [`LocalCovariance::normalized`]:
//! the raw second-moment sum `G Gᵀ` used by the LLE weights, and the
//! density-free `G Gᵀ / (ε² N)` used by the EIG metric. Offsets are always
//! taken from the center point, never from the neighborhood mean.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SymMatrix};
use crate::pointcloud::{radius_neighbors, NeighborMode, NeighborSet, PointCloud};

/// Columns are `x_j − x_center` for the neighbors in ascending index order.
#[derive(Debug, Clone)]
pub struct LocalDataMatrix {
    pub center: usize,
    pub columns: DMatrix<f64>,
    pub neighborhood: NeighborSet,
}

impl LocalDataMatrix {
    pub fn count(&self) -> usize {
        self.columns.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    /// `G 1`, the sum of the offsets.
    pub fn offset_sum(&self) -> DVector<f64> {
        self.columns.column_sum()
    }

    /// Largest offset length, the effective radius of the neighborhood.
    pub fn max_offset(&self) -> f64 {
        self.columns.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct LocalCovariance {
    pub matrix: SymMatrix,
    pub center: usize,
    /// Radius `h` (or `ε`) of the neighborhood.
    pub scale: f64,
    /// Number of neighbors `N` that contributed.
    pub count: usize,
    pub normalized: bool,
}

/// Whether a frame's tangent estimate can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameStatus {
    Ok,
    /// The covariance has rank below the requested intrinsic dimension.
    Degenerate { rank: usize },
}

#[derive(Debug, Clone)]
pub struct TangentFrame {
    pub center: usize,
    pub intrinsic_dim: usize,
    /// p × d, the leading eigenvectors.
    pub tangent_basis: DMatrix<f64>,
    /// p × (p − d), the remaining eigenvectors.
    pub normal_basis: DMatrix<f64>,
    /// All eigenvalues, non-increasing.
    pub eigenvalues: DVector<f64>,
    pub scale: f64,
    /// `λ_d / λ_{d+1}`; infinite when `λ_{d+1}` vanishes or `d = p`.
    pub spectral_gap: f64,
    pub status: FrameStatus,
}

impl TangentFrame {
    pub fn ambient_dim(&self) -> usize {
        self.tangent_basis.nrows()
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.status, FrameStatus::Degenerate { .. })
    }

    /// Orthogonal projector onto the estimated tangent space.
    pub fn tangent_projector(&self) -> DMatrix<f64> {
        &self.tangent_basis * self.tangent_basis.transpose()
    }
}

fn neighborhood_scale(cloud: &PointCloud, nbrs: &NeighborSet) -> f64 {
    match nbrs.mode {
        NeighborMode::Radius(h) | NeighborMode::Geodesic(h) => h,
        NeighborMode::Knn(_) => nbrs
            .indices
            .iter()
            .map(|&j| cloud.distance(nbrs.center, j))
            .fold(0.0, f64::max),
    }
}

pub fn local_data_matrix(cloud: &PointCloud, nbrs: &NeighborSet) -> Result<LocalDataMatrix> {
    cloud.check_index(nbrs.center)?;
    if nbrs.is_empty() {
        return Err(Error::EmptyNeighborhood { center: nbrs.center });
    }
    let mut indices = nbrs.indices.clone();
    indices.sort_unstable();
    let p = cloud.dim();
    let mut columns = DMatrix::<f64>::zeros(p, indices.len());
    for (col, &j) in indices.iter().enumerate() {
        cloud.check_index(j)?;
        columns.set_column(col, &cloud.difference(j, nbrs.center));
    }
    let mut neighborhood = nbrs.clone();
    if let NeighborMode::Knn(_) = nbrs.mode {
        // Keep the radius actually used so covariance metadata is meaningful.
        neighborhood.mode = NeighborMode::Radius(neighborhood_scale(cloud, nbrs).max(f64::MIN_POSITIVE));
    }
    neighborhood.indices = indices;
    Ok(LocalDataMatrix {
        center: nbrs.center,
        columns,
        neighborhood,
    })
}

fn gram_outer(g: &LocalDataMatrix) -> Result<SymMatrix> {
    SymMatrix::new(&g.columns * g.columns.transpose())
}

fn data_scale(g: &LocalDataMatrix) -> f64 {
    match g.neighborhood.mode {
        NeighborMode::Radius(h) | NeighborMode::Geodesic(h) => h,
        NeighborMode::Knn(_) => g.max_offset(),
    }
}

/// `C = G Gᵀ`, the sum (not mean) of offset outer products.
pub fn sample_covariance(g: &LocalDataMatrix) -> Result<LocalCovariance> {
    Ok(LocalCovariance {
        matrix: gram_outer(g)?,
        center: g.center,
        scale: data_scale(g),
        count: g.count(),
        normalized: false,
    })
}

/// `C̄ = G Gᵀ / (ε² N)`.
pub fn normalized_covariance(g: &LocalDataMatrix, eps: f64) -> Result<LocalCovariance> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if g.count() == 0 {
        return Err(Error::EmptyNeighborhood { center: g.center });
    }
    let scale = 1.0 / (eps * eps * g.count() as f64);
    Ok(LocalCovariance {
        matrix: gram_outer(g)?.scaled(scale),
        center: g.center,
        scale: eps,
        count: g.count(),
        normalized: true,
    })
}

/// `G Gᵀ / n_total`, the empirical version of the un-normalized population
/// covariance. Its scale depends on the sampling density.
pub fn population_covariance(g: &LocalDataMatrix, n_total: usize) -> Result<LocalCovariance> {
    if n_total == 0 {
        return Err(Error::InvalidInput("total sample count must be positive".into()));
    }
    Ok(LocalCovariance {
        matrix: gram_outer(g)?.scaled(1.0 / n_total as f64),
        center: g.center,
        scale: data_scale(g),
        count: g.count(),
        normalized: false,
    })
}

/// Splits ℝᵖ into the top-`d` eigenvector span and its complement.
pub fn tangent_frame(c: &LocalCovariance, d: usize) -> Result<TangentFrame> {
    let p = c.matrix.dim();
    if d < 1 || d > p {
        return Err(Error::InvalidInput(format!("intrinsic dimension must be in 1..={p}, got {d}")));
    }
    let eig = sym_eig(&c.matrix, None)?;
    let status = if eig.rank < d {
        FrameStatus::Degenerate { rank: eig.rank }
    } else {
        FrameStatus::Ok
    };
    let spectral_gap = if d == p || eig.eigenvalues[d] <= 0.0 {
        f64::INFINITY
    } else {
        eig.eigenvalues[d - 1] / eig.eigenvalues[d]
    };
    Ok(TangentFrame {
        center: c.center,
        intrinsic_dim: d,
        tangent_basis: eig.eigenvectors.columns(0, d).into_owned(),
        normal_basis: eig.eigenvectors.columns(d, p - d).into_owned(),
        eigenvalues: eig.eigenvalues,
        scale: c.scale,
        spectral_gap,
        status,
    })
}

/// Frame at `center` from the sample covariance of its closed `h_bar`-ball.
pub fn frame_at(cloud: &PointCloud, center: usize, h_bar: f64, d: usize) -> Result<TangentFrame> {
    let nbrs = radius_neighbors(cloud, center, h_bar)?;
    let g = local_data_matrix(cloud, &nbrs)?;
    tangent_frame(&sample_covariance(&g)?, d)
}

/// `P⊥ v`, the component of `v` in the estimated normal space.
pub fn project_normal(frame: &TangentFrame, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != frame.ambient_dim() {
        return Err(Error::InvalidInput(format!(
            "vector has dimension {}, frame lives in R^{}",
            v.len(),
            frame.ambient_dim()
        )));
    }
    let coeffs = frame.normal_basis.transpose() * v;
    Ok(&frame.normal_basis * coeffs)
}

/// Largest consecutive eigenvalue ratio `λ_i / λ_{i+1}` (1-based `i`).
/// A diagnostic only; it is not used to pick `d` anywhere in the crate.
pub fn spectral_gap_dimension(eigenvalues: &DVector<f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..eigenvalues.len().saturating_sub(1) {
        let (a, b) = (eigenvalues[i], eigenvalues[i + 1]);
        if a <= 0.0 {
            break;
        }
        let ratio = if b <= 0.0 { f64::INFINITY } else { a / b };
        if best.is_none_or(|(_, r)| ratio > r) {
            best = Some((i + 1, ratio));
        }
    }
    best.map(|(i, _)| i)
}
