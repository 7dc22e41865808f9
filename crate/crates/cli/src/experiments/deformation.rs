use manicov::eig::{alpha_sensitivity_scan, AlphaScan, DeformedDataset, EigParams, ScanOptions};

use super::{sample_manifold, sample_meta, table_for};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::table::ResultTable;

/// Distance buckets for the α scan: `ε^1.5` (the intermediate regime of
/// the over-truncated case) and a spread of fractions of `ε`.
pub fn default_t_values(eps: f64) -> Vec<f64> {
    let mut t = vec![eps.powf(1.5)];
    t.extend([0.45, 0.6, 0.8, 1.0].iter().map(|f| f * eps));
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

#[derive(Debug, Clone)]
pub struct AlphaReport {
    pub scan: AlphaScan,
    pub t_values: Vec<f64>,
    pub options: ScanOptions,
    sample_meta: Vec<(String, String)>,
    deformation: String,
}

impl AlphaReport {
    pub fn exponent(&self, alpha: usize) -> Option<f64> {
        self.scan.exponents.iter().find(|e| e.0 == alpha).and_then(|e| e.1)
    }

    /// Mean relative error of `α` in the bucket centered at `t`.
    pub fn error_at(&self, alpha: usize, t: f64) -> Option<f64> {
        self.scan
            .rows
            .iter()
            .find(|r| r.alpha == alpha && r.t == t)
            .and_then(|r| r.mean_rel_error)
    }

    pub fn tables(&self, cfg: &ExperimentConfig) -> Vec<ResultTable> {
        let mut rows = table_for(
            cfg,
            "alpha_sensitivity",
            &["alpha", "t", "mean_rel_error", "pairs_used", "pairs_skipped"],
        );
        let mut fits = table_for(
            cfg,
            "alpha_sensitivity_exponents",
            &["alpha", "exponent", "rank_deficient_points"],
        );
        for t in [&mut rows, &mut fits] {
            for (k, v) in &self.sample_meta {
                t.meta(k, v);
            }
            t.meta("deformation_detail", &self.deformation);
            t.meta(
                "t_values_used",
                self.t_values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            );
            t.meta("bucket_half_width", self.options.bucket_half_width);
            t.meta("max_pairs_per_bucket", self.options.max_pairs_per_bucket);
            t.meta("min_pairs", self.options.min_pairs);
            t.meta("error_definition", "mean |EIG_alpha/sqrt(d+2) - t| / t over pairs in the bucket");
        }
        for r in &self.scan.rows {
            rows.push(vec![
                r.alpha.into(),
                r.t.into(),
                r.mean_rel_error.into(),
                r.pairs_used.into(),
                r.pairs_skipped.into(),
            ]);
        }
        for &(alpha, exponent) in &self.scan.exponents {
            let deficient = self
                .scan
                .rank_deficient_points
                .iter()
                .find(|e| e.0 == alpha)
                .map_or(0, |e| e.1);
            fits.push(vec![alpha.into(), exponent.into(), deficient.into()]);
        }
        vec![rows, fits]
    }
}

/// Relative error of EIG distances of several orders on a deformed manifold,
/// bucketed by latent distance, with fitted error-vs-t exponents.
pub fn alpha_sensitivity(cfg: &ExperimentConfig) -> Result<AlphaReport, CliError> {
    let latent = sample_manifold(cfg.manifold, cfg.n, cfg.seed)?;
    let meta = sample_meta(&latent);
    let data = DeformedDataset::new(latent, cfg.deformation.clone())?;
    let t_values = if cfg.t_values.is_empty() {
        default_t_values(cfg.eps)
    } else {
        cfg.t_values.clone()
    };
    let options = ScanOptions::default();
    let scan = alpha_sensitivity_scan(&data, &cfg.alpha_list, EigParams::new(cfg.alpha, cfg.eps)?, &t_values, options)?;
    Ok(AlphaReport {
        scan,
        t_values,
        options,
        sample_meta: meta,
        deformation: cfg.deformation.describe(),
    })
}
