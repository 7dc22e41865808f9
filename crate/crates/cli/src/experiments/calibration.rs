use manicov::covariance::{local_data_matrix, normalized_covariance};
use manicov::eig::{eig_distance_matrix, DeformedDataset, EigParams};
use manicov::pointcloud::radius_neighbors;
use rayon::prelude::*;

use super::{mean, sample_manifold, sample_meta, table_for};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::table::ResultTable;

const RATIO_BINS: usize = 10;

#[derive(Debug, Clone)]
pub struct EigConstantReport {
    pub t_max: f64,
    /// Mean of `|EIG_α / (√(d+2)·t) − 1|` over all evaluated pairs.
    pub mean_abs_deviation: f64,
    pub pairs_used: usize,
    /// Pairs whose distance could not be evaluated (e.g. rank below `α`).
    pub pairs_failed: usize,
    /// Per distance bin: `(t_lo, t_hi, pairs, mean ratio, mean |ratio − 1|)`.
    pub bins: Vec<(f64, f64, usize, f64, f64)>,
    sample_meta: Vec<(String, String)>,
}

impl EigConstantReport {
    pub fn table(&self, cfg: &ExperimentConfig) -> ResultTable {
        let mut t = table_for(cfg, "eig_constant", &["t_lo", "t_hi", "pairs", "mean_ratio", "mean_abs_deviation"]);
        for (k, v) in &self.sample_meta {
            t.meta(k, v);
        }
        t.meta("ratio_definition", "EIG_alpha / (sqrt(d+2) * t), t = latent distance");
        t.meta_float("t_max_used", self.t_max);
        t.meta_float("mean_abs_deviation", self.mean_abs_deviation);
        t.meta("pairs_used", self.pairs_used);
        t.meta("pairs_failed", self.pairs_failed);
        for &(lo, hi, count, ratio, dev) in &self.bins {
            t.push(vec![lo.into(), hi.into(), count.into(), ratio.into(), dev.into()]);
        }
        t
    }
}

/// EIG distance against `√(d+2)` times the latent distance, over every pair
/// with latent distance in `(0, t_max]`.
pub fn eig_constant(cfg: &ExperimentConfig) -> Result<EigConstantReport, CliError> {
    let latent = sample_manifold(cfg.manifold, cfg.n, cfg.seed)?;
    let meta = sample_meta(&latent);
    let data = DeformedDataset::new(latent, cfg.deformation.clone())?;
    let t_max = cfg.t_max.unwrap_or(cfg.eps / 2.0);
    let n = data.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let data = &data;
            (i + 1..n).filter(move |&j| {
                let t = data.latent.geodesic(i, j);
                t > 0.0 && t <= t_max
            })
            .map(move |j| (i, j))
        })
        .collect();
    let params = EigParams::new(cfg.alpha, cfg.eps)?;
    let norm = ((cfg.d + 2) as f64).sqrt();
    let results = eig_distance_matrix(&data, &pairs, params);
    let mut ratios = Vec::with_capacity(results.len());
    let mut failed = 0;
    for ((i, j), r) in results {
        match r {
            Ok(eig) => {
                let t = data.latent.geodesic(i, j);
                ratios.push((t, eig / (norm * t)));
            }
            Err(_) => failed += 1,
        }
    }
    let width = t_max / RATIO_BINS as f64;
    let bins = (0..RATIO_BINS)
        .map(|b| {
            let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
            let inside: Vec<f64> = ratios
                .iter()
                .filter(|(t, _)| *t > lo && (*t <= hi || b + 1 == RATIO_BINS))
                .map(|r| r.1)
                .collect();
            (
                lo,
                hi,
                inside.len(),
                mean(inside.iter().copied()),
                mean(inside.iter().map(|r| (r - 1.0).abs())),
            )
        })
        .collect();
    Ok(EigConstantReport {
        t_max,
        mean_abs_deviation: mean(ratios.iter().map(|r| (r.1 - 1.0).abs())),
        pairs_used: ratios.len(),
        pairs_failed: failed,
        bins,
        sample_meta: meta,
    })
}

#[derive(Debug, Clone)]
pub struct FlatCalibrationReport {
    pub center: usize,
    pub center_param: f64,
    pub neighbors: usize,
    /// Row-major entries of `C̄` with their targets.
    pub entries: Vec<(usize, usize, f64, f64)>,
    pub max_entry_error: f64,
    sample_meta: Vec<(String, String)>,
}

impl FlatCalibrationReport {
    pub fn table(&self, cfg: &ExperimentConfig) -> ResultTable {
        let mut t = table_for(cfg, "flat_calibration", &["row", "col", "value", "expected", "abs_error"]);
        for (k, v) in &self.sample_meta {
            t.meta(k, v);
        }
        t.meta("center_rule", "sample point nearest the interval midpoint");
        t.meta("center", self.center);
        t.meta_float("center_param", self.center_param);
        t.meta("neighbors", self.neighbors);
        t.meta("expected", "e1 e1^T / (d + 2)");
        t.meta_float("max_entry_error", self.max_entry_error);
        for &(r, c, v, e) in &self.entries {
            t.push(vec![r.into(), c.into(), v.into(), e.into(), (v - e).abs().into()]);
        }
        t
    }
}

/// Normalized covariance of the `eps`-ball at the middle of a sampled
/// segment, against `e₁e₁ᵀ/(d+2)`.
pub fn flat_calibration(cfg: &ExperimentConfig) -> Result<FlatCalibrationReport, CliError> {
    let m = sample_manifold(cfg.manifold, cfg.n, cfg.seed)?;
    let (lo, hi) = match cfg.manifold {
        manicov::manifolds::ManifoldKind::Segment { interval } => interval,
        _ => unreachable!("config validation admits only segments here"),
    };
    let mid = 0.5 * (lo + hi);
    let center = (0..m.len())
        .min_by(|&a, &b| {
            let (x, y) = (m.latent.point(a)[0], m.latent.point(b)[0]);
            (x - mid).abs().total_cmp(&(y - mid).abs()).then(a.cmp(&b))
        })
        .expect("sample is non-empty");
    let nbrs = radius_neighbors(&m.cloud, center, cfg.eps)?;
    let g = local_data_matrix(&m.cloud, &nbrs)?;
    let c = normalized_covariance(&g, cfg.eps)?;
    let p = m.cloud.dim();
    let target = 1.0 / (cfg.d + 2) as f64;
    let mut entries = Vec::with_capacity(p * p);
    for r in 0..p {
        for col in 0..p {
            let expected = if r == 0 && col == 0 { target } else { 0.0 };
            entries.push((r, col, c.matrix.as_matrix()[(r, col)], expected));
        }
    }
    let max_entry_error = entries.iter().fold(0.0f64, |m, e| m.max((e.2 - e.3).abs()));
    Ok(FlatCalibrationReport {
        center,
        center_param: m.latent.point(center)[0],
        neighbors: nbrs.len(),
        entries,
        max_entry_error,
        sample_meta: sample_meta(&m),
    })
}
