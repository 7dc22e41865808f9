//! Synthetic manifolds with known geodesic distances.
//!
//! Each sample carries the embedded cloud and, row for row, the intrinsic
//! parameters it was generated from. Distances along the manifold are
//! computed from those parameters in closed form.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pointcloud::{save_csv, PointCloud};
use crate::rng::SeededRng;

pub const DEFAULT_SPIRAL_RANGE: (f64, f64) = (0.0, 10.0);

/// Amplitude of the angular warp of the non-uniform circle.
pub const CIRCLE_WARP: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldKind {
    /// Unit-speed logarithmic spiral in ℝ², latent = arc length `s`.
    Spiral { s_range: (f64, f64) },
    /// Unit circle, latent = angle, uniform density.
    CircleUniform,
    /// Unit circle, latent = angle `2π(θ + 0.3 sin θ)` with `θ` uniform on `[0, 1]`.
    CircleNonuniform,
    /// Unit sphere `S^d ⊂ ℝ^{d+1}`, latent = the point itself.
    Sphere { d: usize },
    /// Segment on the first axis of ℝ², latent = the coordinate.
    Segment { interval: (f64, f64) },
}

impl ManifoldKind {
    pub fn name(&self) -> &'static str {
        match self {
            ManifoldKind::Spiral { .. } => "spiral",
            ManifoldKind::CircleUniform => "circle_uniform",
            ManifoldKind::CircleNonuniform => "circle_nonuniform",
            ManifoldKind::Sphere { .. } => "sphere",
            ManifoldKind::Segment { .. } => "segment",
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            ManifoldKind::Sphere { d } => *d,
            _ => 1,
        }
    }

    /// Geodesic distance between two latent rows.
    pub fn geodesic(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            ManifoldKind::Spiral { .. } | ManifoldKind::Segment { .. } => (a[0] - b[0]).abs(),
            ManifoldKind::CircleUniform | ManifoldKind::CircleNonuniform => arc_distance(a[0], b[0]),
            // Equals arccos⟨a, b⟩ on unit vectors without its loss of
            // precision near 0 and π.
            ManifoldKind::Sphere { .. } => {
                let (mut diff, mut sum) = (0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    diff += (x - y) * (x - y);
                    sum += (x + y) * (x + y);
                }
                2.0 * diff.sqrt().atan2(sum.sqrt())
            }
        }
    }
}

/// Shorter arc between two angles on the unit circle.
pub fn arc_distance(a: f64, b: f64) -> f64 {
    let r = (a - b).abs().rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

/// Point on the spiral at arc length `s`.
pub fn spiral_point(s: f64) -> [f64; 2] {
    let r = s / 2f64.sqrt() + 1.0;
    let a = r.ln();
    [r * a.cos(), r * a.sin()]
}

/// Angle of the non-uniform circle for a uniform draw `θ ∈ [0, 1]`.
pub fn warped_angle(theta: f64) -> f64 {
    2.0 * PI * (theta + CIRCLE_WARP * theta.sin())
}

#[derive(Debug, Clone)]
pub struct ManifoldSample {
    pub cloud: PointCloud,
    /// One row of intrinsic parameters per point.
    pub latent: PointCloud,
    pub kind: ManifoldKind,
    pub seed: u64,
}

impl ManifoldSample {
    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.kind.intrinsic_dim()
    }

    pub fn geodesic(&self, i: usize, j: usize) -> f64 {
        self.kind.geodesic(self.latent.point(i), self.latent.point(j))
    }

    /// Key/value pairs describing how the sample was drawn.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("manifold".to_string(), self.kind.name().to_string()),
            ("n".to_string(), self.len().to_string()),
            ("seed".to_string(), self.seed.to_string()),
        ];
        match self.kind {
            ManifoldKind::Spiral { s_range } => {
                out.push(("s_range".into(), format!("{}:{}", s_range.0, s_range.1)));
                out.push(("s_range_source".into(), "chosen".into()));
            }
            ManifoldKind::CircleNonuniform => out.push(("warp".into(), CIRCLE_WARP.to_string())),
            ManifoldKind::Sphere { d } => out.push(("d".into(), d.to_string())),
            ManifoldKind::Segment { interval } => {
                out.push(("interval".into(), format!("{}:{}", interval.0, interval.1)))
            }
            ManifoldKind::CircleUniform => {}
        }
        out
    }

    pub fn save_latent_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        save_csv(&self.latent, path)
    }

    /// Spiral points at the given arc lengths.
    pub fn spiral_from_params(s: &[f64], s_range: (f64, f64), seed: u64) -> Result<Self> {
        let pts: Vec<Vec<f64>> = s.iter().map(|&v| spiral_point(v).to_vec()).collect();
        Self::from_parts(pts, s.iter().map(|&v| vec![v]).collect(), ManifoldKind::Spiral { s_range }, seed)
    }

    /// Unit-circle points at the given angles.
    pub fn circle_from_angles(angles: &[f64], kind: ManifoldKind, seed: u64) -> Result<Self> {
        if !matches!(kind, ManifoldKind::CircleUniform | ManifoldKind::CircleNonuniform) {
            return Err(Error::InvalidInput(format!("{} is not a circle", kind.name())));
        }
        let pts = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
        Self::from_parts(pts, angles.iter().map(|&a| vec![a]).collect(), kind, seed)
    }

    /// Segment points at the given coordinates.
    pub fn segment_from_params(s: &[f64], interval: (f64, f64), seed: u64) -> Result<Self> {
        let pts = s.iter().map(|&v| vec![v, 0.0]).collect();
        Self::from_parts(pts, s.iter().map(|&v| vec![v]).collect(), ManifoldKind::Segment { interval }, seed)
    }

    fn from_parts(pts: Vec<Vec<f64>>, latent: Vec<Vec<f64>>, kind: ManifoldKind, seed: u64) -> Result<Self> {
        Ok(ManifoldSample {
            cloud: PointCloud::from_points(&pts)?,
            latent: PointCloud::from_points(&latent)?,
            kind,
            seed,
        })
    }
}

fn check_count(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidInput(format!("need at least {min} points, got {n}")));
    }
    Ok(())
}

fn check_interval((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!("invalid interval [{lo}, {hi}]")));
    }
    Ok(())
}

pub fn sample_spiral(n: usize, s_range: (f64, f64), seed: u64) -> Result<ManifoldSample> {
    check_count(n, 2)?;
    check_interval(s_range)?;
    if s_range.0 <= -2f64.sqrt() {
        return Err(Error::InvalidInput("spiral parameter must exceed -sqrt(2)".into()));
    }
    let mut rng = SeededRng::new(seed);
    let s: Vec<f64> = (0..n).map(|_| rng.uniform_in(s_range.0, s_range.1)).collect();
    ManifoldSample::spiral_from_params(&s, s_range, seed)
}

pub fn sample_circle_uniform(n: usize, seed: u64) -> Result<ManifoldSample> {
    check_count(n, 2)?;
    let mut rng = SeededRng::new(seed);
    let angles: Vec<f64> = (0..n).map(|_| 2.0 * PI * rng.uniform()).collect();
    ManifoldSample::circle_from_angles(&angles, ManifoldKind::CircleUniform, seed)
}

pub fn sample_circle_nonuniform(n: usize, seed: u64) -> Result<ManifoldSample> {
    check_count(n, 2)?;
    let mut rng = SeededRng::new(seed);
    let angles: Vec<f64> = (0..n).map(|_| warped_angle(rng.uniform())).collect();
    ManifoldSample::circle_from_angles(&angles, ManifoldKind::CircleNonuniform, seed)
}

pub fn sample_sphere(n: usize, d: usize, seed: u64) -> Result<ManifoldSample> {
    if d < 1 {
        return Err(Error::InvalidInput("sphere dimension must be at least 1".into()));
    }
    check_count(n, d + 2)?;
    let mut rng = SeededRng::new(seed);
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let v: Vec<f64> = (0..=d).map(|_| rng.standard_normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            pts.push(v.into_iter().map(|x| x / norm).collect::<Vec<_>>());
        }
    }
    ManifoldSample::from_parts(pts.clone(), pts, ManifoldKind::Sphere { d }, seed)
}

pub fn sample_segment(n: usize, interval: (f64, f64), seed: u64) -> Result<ManifoldSample> {
    check_count(n, 2)?;
    check_interval(interval)?;
    let mut rng = SeededRng::new(seed);
    let s: Vec<f64> = (0..n).map(|_| rng.uniform_in(interval.0, interval.1)).collect();
    ManifoldSample::segment_from_params(&s, interval, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spiral_examples() {
        assert_eq!(spiral_point(0.0), [1.0, 0.0]);
        let m = ManifoldSample::spiral_from_params(&[0.0, 0.5], DEFAULT_SPIRAL_RANGE, 0).unwrap();
        assert_eq!(m.geodesic(0, 1), 0.5);
    }

    #[test]
    fn spiral_is_unit_speed() {
        let steps = 10_000;
        let mut length = 0.0;
        let mut prev = spiral_point(0.0);
        for k in 1..=steps {
            let cur = spiral_point(k as f64 / steps as f64);
            length += ((cur[0] - prev[0]).powi(2) + (cur[1] - prev[1]).powi(2)).sqrt();
            prev = cur;
        }
        assert_abs_diff_eq!(length, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn nonuniform_circle_examples() {
        assert_eq!(warped_angle(0.0), 0.0);
        let m = sample_circle_nonuniform(8000, 42).unwrap();
        for p in m.cloud.points() {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() <= 1e-12);
        }
        // χ² against uniform over 20 angular bins; 36.19 is the 0.99 quantile at 19 dof.
        let bins = 20;
        let mut counts = vec![0usize; bins];
        for i in 0..m.len() {
            let a = m.latent.point(i)[0].rem_euclid(2.0 * PI);
            counts[((a / (2.0 * PI) * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let expected = m.len() as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 > 36.19, "chi2 {chi2}");
    }

    #[test]
    fn uniform_circle_passes_chi_square() {
        let m = sample_circle_uniform(8000, 42).unwrap();
        let bins = 20;
        let mut counts = vec![0usize; bins];
        for i in 0..m.len() {
            let a = m.latent.point(i)[0];
            counts[((a / (2.0 * PI) * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let expected = m.len() as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 36.19, "chi2 {chi2}");
    }

    #[test]
    fn sphere_examples() {
        let k = ManifoldKind::Sphere { d: 2 };
        assert_abs_diff_eq!(k.geodesic(&[0.0, 0.0, 1.0], &[0.0, 0.0, -1.0]), PI, epsilon = 1e-15);
        let p = [0.6, 0.0, 0.8];
        assert_eq!(k.geodesic(&p, &p), 0.0);
        let q = [0.0, 1.0, 0.0];
        let dot: f64 = p.iter().zip(&q).map(|(x, y)| x * y).sum();
        assert_abs_diff_eq!(k.geodesic(&p, &q), dot.clamp(-1.0, 1.0).acos(), epsilon = 1e-15);
        assert!(sample_sphere(3, 2, 0).is_err());
        let m = sample_sphere(100, 3, 1).unwrap();
        assert_eq!(m.cloud.dim(), 4);
        for p in m.cloud.points() {
            assert_abs_diff_eq!(p.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn segment_oracle_is_euclidean() {
        let m = sample_segment(50, (-1.0, 2.0), 3).unwrap();
        for i in 0..m.len() {
            for j in 0..m.len() {
                assert_abs_diff_eq!(m.geodesic(i, j), m.cloud.distance(i, j), epsilon = 1e-15);
            }
        }
        let m = ManifoldSample::segment_from_params(&[0.0, 2.5], (0.0, 2.5), 0).unwrap();
        assert_eq!(m.geodesic(0, 1), 2.5);
    }

    #[test]
    fn same_seed_same_sample() {
        let a = sample_spiral(300, DEFAULT_SPIRAL_RANGE, 9).unwrap();
        let b = sample_spiral(300, DEFAULT_SPIRAL_RANGE, 9).unwrap();
        assert_eq!(a.cloud, b.cloud);
        let c = sample_spiral(300, DEFAULT_SPIRAL_RANGE, 10).unwrap();
        assert_ne!(a.cloud, c.cloud);
    }

    #[test]
    fn oracles_are_metrics_dominating_chords() {
        let samples = [
            sample_spiral(200, DEFAULT_SPIRAL_RANGE, 1).unwrap(),
            sample_circle_uniform(200, 2).unwrap(),
            sample_circle_nonuniform(200, 3).unwrap(),
            sample_sphere(200, 2, 4).unwrap(),
            sample_segment(200, (0.0, 1.0), 5).unwrap(),
        ];
        for m in &samples {
            let mut rng = SeededRng::new(77);
            for _ in 0..10_000 {
                let (i, j, k) = (rng.index(m.len()), rng.index(m.len()), rng.index(m.len()));
                let (ij, jk, ik) = (m.geodesic(i, j), m.geodesic(j, k), m.geodesic(i, k));
                assert_eq!(ij, m.geodesic(j, i));
                assert!(ik <= ij + jk + 1e-9, "{}: {ik} > {ij} + {jk}", m.kind.name());
                assert!(ij >= m.cloud.distance(i, j) - 1e-12, "{}", m.kind.name());
            }
            assert_eq!(m.geodesic(0, 0), 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sample_spiral(1, DEFAULT_SPIRAL_RANGE, 0).is_err());
        assert!(sample_segment(10, (1.0, 1.0), 0).is_err());
        assert!(ManifoldSample::circle_from_angles(&[0.0], ManifoldKind::Sphere { d: 1 }, 0).is_err());
    }
}
