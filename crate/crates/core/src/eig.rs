//! EIG distances: Mahalanobis-type distances built from the truncated
//! inverses of normalized local covariances, which undo an unknown smooth
//! deformation of the observed data.
//!
//! Neighborhoods are the images of latent geodesic balls, so every dataset
//! pairs the observed cloud with the latent sample it came from.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::covariance::{local_data_matrix, normalized_covariance};
use crate::error::{Error, Result};
use crate::linalg::{sym_eig, truncated_inverse_of, SymEig, SymMatrix};
use crate::manifolds::ManifoldSample;
use crate::pointcloud::{radius_neighbors, NeighborMode, NeighborSet, PointCloud};

/// Named observation maps applied to the embedded latent cloud.
#[derive(Debug, Clone, PartialEq)]
pub enum Deformation {
    Identity,
    /// `x ↦ diag(s) x`.
    LinearScaling { diag: Vec<f64> },
    /// `x ↦ x + a·sin(b·x)` in every coordinate; a diffeomorphism when `|ab| < 1`.
    CoordinateWarp { a: f64, b: f64 },
    /// `(x, y, z) ↦ (x, y, z, a(x² − y²))`, bending a surface in ℝ³ into ℝ⁴.
    SphereBend { a: f64 },
}

impl Deformation {
    pub fn name(&self) -> &'static str {
        match self {
            Deformation::Identity => "identity",
            Deformation::LinearScaling { .. } => "linear",
            Deformation::CoordinateWarp { .. } => "warp",
            Deformation::SphereBend { .. } => "bend",
        }
    }

    /// Compact parameter description for result metadata.
    pub fn describe(&self) -> String {
        match self {
            Deformation::Identity => "identity".into(),
            Deformation::LinearScaling { diag } => {
                let parts: Vec<String> = diag.iter().map(|v| v.to_string()).collect();
                format!("linear(diag={})", parts.join(":"))
            }
            Deformation::CoordinateWarp { a, b } => format!("warp(a={a},b={b})"),
            Deformation::SphereBend { a } => format!("bend(a={a})"),
        }
    }

    pub fn apply(&self, cloud: &PointCloud) -> Result<PointCloud> {
        let p = cloud.dim();
        match self {
            Deformation::Identity => Ok(cloud.clone()),
            Deformation::LinearScaling { diag } => {
                if diag.len() != p {
                    return Err(Error::InvalidInput(format!(
                        "scaling has {} entries for points in R^{p}",
                        diag.len()
                    )));
                }
                if diag.iter().any(|&s| s == 0.0 || !s.is_finite()) {
                    return Err(Error::InvalidInput("scaling must be finite and invertible".into()));
                }
                cloud.map_points(p, |x| x.iter().zip(diag).map(|(v, s)| v * s).collect())
            }
            Deformation::CoordinateWarp { a, b } => {
                if !((a * b).abs() < 1.0) {
                    return Err(Error::InvalidInput(format!("warp needs |ab| < 1, got a={a}, b={b}")));
                }
                cloud.map_points(p, |x| x.iter().map(|&v| v + a * (b * v).sin()).collect())
            }
            Deformation::SphereBend { a } => {
                if p != 3 {
                    return Err(Error::InvalidInput(format!("bending needs points in R^3, got R^{p}")));
                }
                if !a.is_finite() {
                    return Err(Error::InvalidInput("bending amplitude must be finite".into()));
                }
                cloud.map_points(4, |x| vec![x[0], x[1], x[2], a * (x[0] * x[0] - x[1] * x[1])])
            }
        }
    }
}

/// A latent sample and its observed image, row for row.
#[derive(Debug, Clone)]
pub struct DeformedDataset {
    pub latent: ManifoldSample,
    pub observed: PointCloud,
    pub deformation: Deformation,
}

impl DeformedDataset {
    pub fn new(latent: ManifoldSample, deformation: Deformation) -> Result<Self> {
        let observed = deformation.apply(&latent.cloud)?;
        Ok(DeformedDataset { latent, observed, deformation })
    }

    /// Pairs an arbitrary observed cloud with a latent sample, e.g. after a
    /// further rigid motion of the observations.
    pub fn from_parts(latent: ManifoldSample, observed: PointCloud, deformation: Deformation) -> Result<Self> {
        if latent.len() != observed.len() {
            return Err(Error::InvalidInput(format!(
                "latent sample has {} points, observed cloud {}",
                latent.len(),
                observed.len()
            )));
        }
        Ok(DeformedDataset { latent, observed, deformation })
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.latent.intrinsic_dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigParams {
    /// Truncation order.
    pub alpha: usize,
    /// Latent radius of the neighborhoods.
    pub eps: f64,
}

impl EigParams {
    pub fn new(alpha: usize, eps: f64) -> Result<Self> {
        let params = EigParams { alpha, eps };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        if self.alpha < 1 {
            return Err(Error::InvalidInput("alpha must be at least 1".into()));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidInput(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

/// Points whose latent geodesic distance to `i` is at most `eps`: the
/// observed image of the latent `eps`-ball.
pub fn ellipsoid_neighbors(data: &DeformedDataset, i: usize, eps: f64) -> Result<NeighborSet> {
    data.observed.check_index(i)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let indices: Vec<usize> = (0..data.len())
        .filter(|&j| j != i && data.latent.geodesic(i, j) <= eps)
        .collect();
    if indices.is_empty() {
        return Err(Error::EmptyNeighborhood { center: i });
    }
    Ok(NeighborSet {
        center: i,
        indices,
        mode: NeighborMode::Geodesic(eps),
    })
}

/// Euclidean `eps`-ball in the observation space. This ignores the latent
/// structure and so does not produce the deformed geodesic ball; it exists
/// for comparison only.
pub fn observed_ball_neighbors(data: &DeformedDataset, i: usize, eps: f64) -> Result<NeighborSet> {
    let nb = radius_neighbors(&data.observed, i, eps)?;
    if nb.is_empty() {
        return Err(Error::EmptyNeighborhood { center: i });
    }
    Ok(nb)
}

/// Eigendecomposition of the normalized covariance over the ellipsoid at `i`.
pub fn ellipsoid_covariance_eig(data: &DeformedDataset, i: usize, eps: f64) -> Result<SymEig> {
    let nb = ellipsoid_neighbors(data, i, eps)?;
    let g = local_data_matrix(&data.observed, &nb)?;
    sym_eig(&normalized_covariance(&g, eps)?.matrix, None)
}

fn quadratic_distance(delta: &DVector<f64>, a: &SymMatrix, b: &SymMatrix) -> f64 {
    let q = 0.5 * (delta.dot(&(a.as_matrix() * delta)) + delta.dot(&(b.as_matrix() * delta)));
    q.max(0.0).sqrt()
}

pub fn eig_distance(data: &DeformedDataset, i: usize, j: usize, params: EigParams) -> Result<f64> {
    params.validate()?;
    data.observed.check_index(i)?;
    data.observed.check_index(j)?;
    if i == j {
        return Ok(0.0);
    }
    let ti = truncated_inverse_of(&ellipsoid_covariance_eig(data, i, params.eps)?, params.alpha).map_err(|e| e.at(i))?;
    let tj = truncated_inverse_of(&ellipsoid_covariance_eig(data, j, params.eps)?, params.alpha).map_err(|e| e.at(j))?;
    Ok(quadratic_distance(&data.observed.difference(j, i), &ti, &tj))
}

type PairResult = ((usize, usize), Result<f64>);

/// EIG distance for each requested pair. Covariances are computed once per
/// distinct point; a failure at one point only fails the pairs that use it.
pub fn eig_distance_matrix(data: &DeformedDataset, pairs: &[(usize, usize)], params: EigParams) -> Vec<PairResult> {
    if let Err(e) = params.validate() {
        let msg = e.to_string();
        return pairs.iter().map(|&p| (p, Err(Error::InvalidInput(msg.clone())))).collect();
    }
    let points: Vec<usize> = {
        let mut v: Vec<usize> = pairs
            .iter()
            .filter(|(i, j)| i != j)
            .flat_map(|&(i, j)| [i, j])
            .filter(|&i| i < data.len())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let metric = |i: usize| -> Result<SymMatrix> {
        truncated_inverse_of(&ellipsoid_covariance_eig(data, i, params.eps)?, params.alpha).map_err(|e| e.at(i))
    };
    let cache: BTreeMap<usize, Option<SymMatrix>> = points.par_iter().map(|&i| (i, metric(i).ok())).collect();

    pairs
        .iter()
        .map(|&(i, j)| {
            let result = (|| {
                data.observed.check_index(i)?;
                data.observed.check_index(j)?;
                if i == j {
                    return Ok(0.0);
                }
                // A missing cache entry means the point failed; recompute for the error value.
                let ti = cache[&i].clone().map_or_else(|| metric(i), Ok)?;
                let tj = cache[&j].clone().map_or_else(|| metric(j), Ok)?;
                Ok(quadratic_distance(&data.observed.difference(j, i), &ti, &tj))
            })();
            ((i, j), result)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Relative half-width of each distance bucket.
    pub bucket_half_width: f64,
    /// Cap on pairs per bucket; larger buckets are thinned evenly.
    pub max_pairs_per_bucket: usize,
    /// Buckets with fewer usable pairs are reported empty.
    pub min_pairs: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            bucket_half_width: 0.1,
            max_pairs_per_bucket: 20_000,
            min_pairs: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub alpha: usize,
    pub t: f64,
    /// Mean of `|EIG_α / √(d+2) − t_pair| / t_pair`; `None` for an empty bucket.
    pub mean_rel_error: Option<f64>,
    pub pairs_used: usize,
    /// Pairs dropped because a covariance had rank below `α` or no neighbors.
    pub pairs_skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaScan {
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `log error` against `log t` per `α`, when at
    /// least two buckets are populated.
    pub exponents: Vec<(usize, Option<f64>)>,
    /// Points whose covariance rank fell below each `α`.
    pub rank_deficient_points: Vec<(usize, usize)>,
}

/// All pairs `i < j` whose latent distance lies within the relative bucket around `t`.
fn bucket_pairs(data: &DeformedDataset, t: f64, opts: &ScanOptions) -> Vec<(usize, usize, f64)> {
    let (lo, hi) = (t * (1.0 - opts.bucket_half_width), t * (1.0 + opts.bucket_half_width));
    let n = data.len();
    let all: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n).filter_map(move |j| {
                let g = data.latent.geodesic(i, j);
                (g >= lo && g <= hi && g > 0.0).then_some((i, j, g))
            })
        })
        .collect();
    if all.len() <= opts.max_pairs_per_bucket {
        return all;
    }
    let stride = all.len() as f64 / opts.max_pairs_per_bucket as f64;
    (0..opts.max_pairs_per_bucket).map(|k| all[(k as f64 * stride) as usize]).collect()
}

/// Mean relative error of `EIG_α / √(d+2)` as an estimate of the latent
/// distance, per truncation order and distance bucket. `params.alpha` is
/// ignored in favor of `alphas`.
pub fn alpha_sensitivity_scan(
    data: &DeformedDataset,
    alphas: &[usize],
    params: EigParams,
    t_values: &[f64],
    opts: ScanOptions,
) -> Result<AlphaScan> {
    params.validate()?;
    if alphas.iter().any(|&a| a < 1) {
        return Err(Error::InvalidInput("alpha values must be at least 1".into()));
    }
    if t_values.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput("t values must be positive".into()));
    }
    let d = data.intrinsic_dim();
    let norm = ((d + 2) as f64).sqrt();
    let eigs: Vec<Option<SymEig>> = (0..data.len())
        .into_par_iter()
        .map(|i| ellipsoid_covariance_eig(data, i, params.eps).ok())
        .collect();
    let buckets: Vec<Vec<(usize, usize, f64)>> = t_values.iter().map(|&t| bucket_pairs(data, t, &opts)).collect();

    let mut rows = Vec::new();
    let mut exponents = Vec::new();
    let mut rank_deficient_points = Vec::new();
    for &alpha in alphas {
        let metrics: Vec<Option<SymMatrix>> = eigs
            .par_iter()
            .map(|e| e.as_ref().and_then(|e| truncated_inverse_of(e, alpha).ok()))
            .collect();
        rank_deficient_points.push((alpha, metrics.iter().filter(|m| m.is_none()).count()));
        let mut fit = Vec::new();
        for (&t, pairs) in t_values.iter().zip(&buckets) {
            // Collected before summing so the result does not depend on how
            // rayon splits the work.
            let errors: Vec<f64> = pairs
                .par_iter()
                .filter_map(|&(i, j, g)| {
                    let (a, b) = (metrics[i].as_ref()?, metrics[j].as_ref()?);
                    let eig = quadratic_distance(&data.observed.difference(j, i), a, b);
                    Some((eig / norm - g).abs() / g)
                })
                .collect();
            let (sum, used) = (errors.iter().sum::<f64>(), errors.len());
            let mean_rel_error = (used >= opts.min_pairs.max(1)).then(|| sum / used as f64);
            if let Some(e) = mean_rel_error.filter(|&e| e > 0.0) {
                fit.push((t.ln(), e.ln()));
            }
            rows.push(ScanRow {
                alpha,
                t,
                mean_rel_error,
                pairs_used: used,
                pairs_skipped: pairs.len() - used,
            });
        }
        exponents.push((alpha, log_log_slope(&fit)));
    }
    Ok(AlphaScan { rows, exponents, rank_deficient_points })
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::population_covariance;
    use crate::linalg::truncated_inverse;
    use crate::manifolds::{sample_circle_nonuniform, sample_circle_uniform, sample_segment, ManifoldKind};
    use crate::rng::SeededRng;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, Rotation3};

    fn segment_data(n: usize, deformation: Deformation, seed: u64) -> DeformedDataset {
        DeformedDataset::new(sample_segment(n, (0.0, 1.0), seed).unwrap(), deformation).unwrap()
    }

    #[test]
    fn ellipsoid_examples() {
        let latent = ManifoldSample::circle_from_angles(&[0.0, 0.1, 0.5], ManifoldKind::CircleUniform, 0).unwrap();
        let data = DeformedDataset::new(latent, Deformation::Identity).unwrap();
        assert_eq!(ellipsoid_neighbors(&data, 0, 0.2).unwrap().indices, vec![1]);
        assert_eq!(ellipsoid_neighbors(&data, 0, 10.0).unwrap().indices, vec![1, 2]);
        assert!(matches!(ellipsoid_neighbors(&data, 2, 0.05), Err(Error::EmptyNeighborhood { center: 2 })));
    }

    #[test]
    fn ellipsoid_matches_arc_scan() {
        let data = DeformedDataset::new(sample_circle_uniform(500, 4).unwrap(), Deformation::Identity).unwrap();
        let mut rng = SeededRng::new(1);
        for _ in 0..5 {
            let i = rng.index(500);
            let nb = ellipsoid_neighbors(&data, i, 0.3).unwrap();
            let brute: Vec<usize> = (0..500)
                .filter(|&j| {
                    let a = data.latent.latent.point(i)[0];
                    let b = data.latent.latent.point(j)[0];
                    let diff = (a - b).abs();
                    j != i && diff.min(2.0 * std::f64::consts::PI - diff) <= 0.3
                })
                .collect();
            assert_eq!(nb.indices, brute);
        }
    }

    #[test]
    fn self_distance_is_zero() {
        let data = segment_data(300, Deformation::Identity, 1);
        assert_eq!(eig_distance(&data, 5, 5, EigParams::new(1, 0.05).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn flat_segment_recovers_sqrt_three() {
        let data = segment_data(20_000, Deformation::Identity, 2);
        let params = EigParams::new(1, 0.05).unwrap();
        let mut rng = SeededRng::new(3);
        let mut errs = Vec::new();
        while errs.len() < 50 {
            let (i, j) = (rng.index(data.len()), rng.index(data.len()));
            let t = data.latent.geodesic(i, j);
            let s = data.latent.latent.point(i)[0];
            if i == j || t > 0.025 || !(0.06..0.94).contains(&s) {
                continue;
            }
            let e = eig_distance(&data, i, j, params).unwrap();
            errs.push((e / (3f64.sqrt() * t) - 1.0).abs());
        }
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        assert!(mean < 0.03, "mean relative error {mean}");
    }

    #[test]
    fn scaling_is_corrected() {
        let params = EigParams::new(1, 0.05).unwrap();
        let base = segment_data(3000, Deformation::Identity, 6);
        let reference = eig_distance(&base, 10, 20, params).unwrap();
        for s in [0.5, 2.0, 10.0] {
            let data = segment_data(3000, Deformation::LinearScaling { diag: vec![s, s] }, 6);
            let e = eig_distance(&data, 10, 20, params).unwrap();
            assert_abs_diff_eq!(e, reference, epsilon = 1e-9 * reference);
            assert_abs_diff_eq!(data.observed.distance(10, 20), s * base.observed.distance(10, 20), epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_and_rigid_invariant() {
        let latent = crate::manifolds::sample_sphere(2000, 2, 7).unwrap();
        let data = DeformedDataset::new(latent.clone(), Deformation::CoordinateWarp { a: 0.3, b: 2.0 }).unwrap();
        let params = EigParams::new(2, 0.3).unwrap();
        let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let moved = data.observed.rigid_motion(&DMatrix::from_iterator(3, 3, rot.matrix().iter().copied()), &[1.0, -2.0, 0.5]).unwrap();
        let moved = DeformedDataset::from_parts(latent, moved, data.deformation.clone()).unwrap();
        let mut rng = SeededRng::new(2);
        let mut checked = 0;
        while checked < 10 {
            let (i, j) = (rng.index(2000), rng.index(2000));
            if data.latent.geodesic(i, j) > 0.3 {
                continue;
            }
            let a = eig_distance(&data, i, j, params).unwrap();
            assert_eq!(a, eig_distance(&data, j, i, params).unwrap());
            let b = eig_distance(&moved, i, j, params).unwrap();
            assert!((a - b).abs() <= 1e-10 * (1.0 + a), "{a} vs {b}");
            checked += 1;
        }
    }

    #[test]
    fn batch_matches_individual_calls() {
        let data = DeformedDataset::new(sample_circle_uniform(800, 3).unwrap(), Deformation::CoordinateWarp { a: 0.2, b: 1.5 }).unwrap();
        let params = EigParams::new(1, 0.2).unwrap();
        assert!(eig_distance_matrix(&data, &[], params).is_empty());
        let mut rng = SeededRng::new(9);
        let mut pairs = Vec::new();
        while pairs.len() < 10 {
            let (i, j) = (rng.index(800), rng.index(800));
            if data.latent.geodesic(i, j) < 0.15 {
                pairs.push((i, j));
            }
        }
        let batch = eig_distance_matrix(&data, &pairs, params);
        for ((pair, value), &(i, j)) in batch.iter().zip(&pairs) {
            assert_eq!(*pair, (i, j));
            let single = eig_distance(&data, i, j, params).unwrap();
            assert!((value.as_ref().unwrap() - single).abs() <= 1e-12 * (1.0 + single));
        }
        let one = eig_distance_matrix(&data, &pairs[..1], params);
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn batch_collects_errors() {
        let data = segment_data(200, Deformation::Identity, 1);
        let params = EigParams::new(2, 0.05).unwrap();
        let out = eig_distance_matrix(&data, &[(0, 1), (3, 3), (0, 999)], params);
        assert!(matches!(out[0].1.as_ref().unwrap_err().root(), Error::RankExceeded { alpha: 2, rank: 1 }));
        assert_eq!(*out[1].1.as_ref().unwrap(), 0.0);
        assert!(matches!(out[2].1, Err(Error::IndexError { .. })));
    }

    #[test]
    fn deformation_validation() {
        let c = PointCloud::from_points(&[vec![0.0, 1.0]]).unwrap();
        assert!(Deformation::CoordinateWarp { a: 1.0, b: 1.0 }.apply(&c).is_err());
        assert!(Deformation::SphereBend { a: 0.5 }.apply(&c).is_err());
        assert!(Deformation::LinearScaling { diag: vec![1.0] }.apply(&c).is_err());
        assert!(Deformation::LinearScaling { diag: vec![1.0, 0.0] }.apply(&c).is_err());
        let c3 = PointCloud::from_points(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(Deformation::SphereBend { a: 0.5 }.apply(&c3).unwrap().point(0), &[1.0, 2.0, 3.0, -1.5]);
    }

    /// Distance recovered with `G Gᵀ / n` in place of the normalized covariance.
    fn unnormalized_distance(data: &DeformedDataset, i: usize, j: usize, eps: f64) -> f64 {
        let metric = |k: usize| {
            let nb = ellipsoid_neighbors(data, k, eps).unwrap();
            let g = local_data_matrix(&data.observed, &nb).unwrap();
            truncated_inverse(&population_covariance(&g, data.len()).unwrap().matrix.scaled(1.0 / (eps * eps)), 1).unwrap()
        };
        quadratic_distance(&data.observed.difference(j, i), &metric(i), &metric(j))
    }

    #[test]
    fn normalization_removes_density_dependence() {
        let data = DeformedDataset::new(sample_circle_nonuniform(4000, 12).unwrap(), Deformation::Identity).unwrap();
        let eps = 0.1;
        let params = EigParams::new(1, eps).unwrap();
        let mut normalized = 0.0;
        let mut raw = Vec::new();
        let mut rng = SeededRng::new(4);
        while raw.len() < 100 {
            let (i, j) = (rng.index(data.len()), rng.index(data.len()));
            let t = data.latent.geodesic(i, j);
            if i == j || t > eps / 2.0 {
                continue;
            }
            normalized += (eig_distance(&data, i, j, params).unwrap() / (3f64.sqrt() * t) - 1.0).abs();
            raw.push(unnormalized_distance(&data, i, j, eps) / (3f64.sqrt() * t));
        }
        normalized /= raw.len() as f64;
        // The un-normalized metric carries an unknown global factor; remove it
        // so only the point-to-point density dependence is compared.
        let scale = raw.iter().sum::<f64>() / raw.len() as f64;
        let raw = raw.iter().map(|r| (r / scale - 1.0).abs()).sum::<f64>() / raw.len() as f64;
        assert!(normalized < raw, "normalized {normalized} vs raw {raw}");
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [0.1f64, 0.2, 0.4].iter().map(|&t| (t.ln(), (3.0 * t * t).ln())).collect();
        assert_abs_diff_eq!(log_log_slope(&pts).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
    }

    #[test]
    fn scan_reports_empty_buckets() {
        let data = segment_data(400, Deformation::Identity, 3);
        let params = EigParams::new(1, 0.05).unwrap();
        let scan = alpha_sensitivity_scan(&data, &[1, 2], params, &[0.02, 5.0], ScanOptions::default()).unwrap();
        assert_eq!(scan.rows.len(), 4);
        assert!(scan.rows[0].mean_rel_error.is_some());
        assert_eq!(scan.rows[1].mean_rel_error, None);
        // Segment covariances have rank 1, so α = 2 skips everything.
        assert_eq!(scan.rows[2].pairs_used, 0);
        assert!(scan.rows[2].pairs_skipped > 0);
        assert_eq!(scan.rank_deficient_points[1], (2, 400));
    }
}
