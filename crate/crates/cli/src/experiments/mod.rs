//! Experiment drivers. Each returns a typed report (used directly by the
//! tests) that renders into one or more [`ResultTable`]s.

mod adhoc;
mod calibration;
mod deformation;
mod geodesic;
mod spectrum;

pub use adhoc::{covgeo, covgeo_rows, dm, eig_dist, lle, sample, CovgeoRow};
pub use calibration::{eig_constant, flat_calibration, EigConstantReport, FlatCalibrationReport};
pub use deformation::{alpha_sensitivity, default_t_values, AlphaReport};
pub use geodesic::{geodesic_rates, spiral_geodesic, GlobalPair, LocalPair, RateReport, RateRow, SpiralReport};
pub use spectrum::{circle_laplacian_eigenvalue, s1_eigenvalues, CircleSpectrumReport, SpectrumRow};

use manicov::manifolds::{
    sample_circle_nonuniform, sample_circle_uniform, sample_segment, sample_sphere, sample_spiral, ManifoldKind,
    ManifoldSample,
};
use manicov::PointCloud;

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;
use crate::table::ResultTable;

/// Tables to write, plus point clouds in the headerless input format.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub tables: Vec<ResultTable>,
    pub clouds: Vec<(String, PointCloud)>,
}

impl From<Vec<ResultTable>> for RunOutput {
    fn from(tables: Vec<ResultTable>) -> Self {
        RunOutput {
            tables,
            clouds: Vec::new(),
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    Ok(match cfg.command {
        Command::SpiralGeodesic => spiral_geodesic(cfg)?.tables(cfg).into(),
        Command::GeodesicRates => vec![geodesic_rates(cfg)?.table(cfg)].into(),
        Command::S1Eigenvalues => vec![s1_eigenvalues(cfg)?.table(cfg)].into(),
        Command::AlphaSensitivity => alpha_sensitivity(cfg)?.tables(cfg).into(),
        Command::EigConstant => vec![eig_constant(cfg)?.table(cfg)].into(),
        Command::FlatCalibration => vec![flat_calibration(cfg)?.table(cfg)].into(),
        Command::Sample => sample(cfg)?,
        Command::Covgeo => vec![covgeo(cfg)?].into(),
        Command::EigDist => vec![eig_dist(cfg)?].into(),
        Command::Lle | Command::LdrLle => lle(cfg)?.into(),
        Command::Dm => vec![dm(cfg)?].into(),
    })
}

/// Draws the configured manifold.
pub fn sample_manifold(kind: ManifoldKind, n: usize, seed: u64) -> manicov::Result<ManifoldSample> {
    match kind {
        ManifoldKind::Spiral { s_range } => sample_spiral(n, s_range, seed),
        ManifoldKind::CircleUniform => sample_circle_uniform(n, seed),
        ManifoldKind::CircleNonuniform => sample_circle_nonuniform(n, seed),
        ManifoldKind::Sphere { d } => sample_sphere(n, d, seed),
        ManifoldKind::Segment { interval } => sample_segment(n, interval, seed),
    }
}

/// A table whose metadata starts with the table name, the code version,
/// and every resolved config value.
pub(crate) fn table_for(cfg: &ExperimentConfig, name: &str, columns: &[&str]) -> ResultTable {
    let mut t = ResultTable::new(name, columns);
    t.meta("table", name);
    t.meta("code_version", env!("CARGO_PKG_VERSION"));
    for (k, v) in cfg.entries() {
        t.meta(&k, v);
    }
    t
}

/// Sampling details beyond the config echo, with a `sample_` prefix.
pub(crate) fn sample_meta(sample: &ManifoldSample) -> Vec<(String, String)> {
    sample
        .metadata()
        .into_iter()
        .filter(|(k, _)| !matches!(k.as_str(), "manifold" | "n" | "seed"))
        .map(|(k, v)| (format!("sample_{k}"), v))
        .collect()
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        assert_eq!(median([3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median([4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median([]).is_nan());
        assert_eq!(mean([1.0, 2.0, 6.0]), 3.0);
    }
}
