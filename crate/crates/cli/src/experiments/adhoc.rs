use std::path::Path;

use manicov::covariance::{frame_at, TangentFrame};
use manicov::eig::{eig_distance_matrix, DeformedDataset, Deformation, EigParams};
use manicov::geodesic::corrected_distance;
use manicov::lle::{
    assemble_lle_matrix, diffusion_maps_eigenvalues, embed, laplacian_eigenvalues, NeighborScale, Regularization,
    WeightVariant,
};
use manicov::manifolds::{ManifoldKind, ManifoldSample};
use manicov::pointcloud::{load_csv, radius_neighbors};
use manicov::PointCloud;
use rayon::prelude::*;

use super::{sample_manifold, sample_meta, table_for, RunOutput};
use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;
use crate::table::{Cell, ResultTable};

fn load(path: &Path, what: &str) -> Result<PointCloud, CliError> {
    load_csv(path).map_err(|e| CliError::input(format!("reading {what} {}", path.display()), e))
}

fn input_cloud(cfg: &ExperimentConfig) -> Result<PointCloud, CliError> {
    let path = cfg.input.as_deref().expect("validated: input is set");
    load(path, "input")
}

fn neighbor_scale(cfg: &ExperimentConfig) -> NeighborScale {
    match cfg.knn {
        Some(k) => NeighborScale::Knn(k),
        None => NeighborScale::Radius(cfg.h),
    }
}

/// Draws a manifold sample; writes the cloud and its latent parameters in
/// the headerless input format.
pub fn sample(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let m = sample_manifold(cfg.manifold, cfg.n, cfg.seed)?;
    let mut t = table_for(cfg, "sample", &["file", "rows", "cols"]);
    for (k, v) in sample_meta(&m) {
        t.meta(&k, v);
    }
    t.push(vec!["points.csv".into(), m.cloud.len().into(), m.cloud.dim().into()]);
    t.push(vec!["latent.csv".into(), m.latent.len().into(), m.latent.dim().into()]);
    Ok(RunOutput {
        tables: vec![t],
        clouds: vec![("points".into(), m.cloud), ("latent".into(), m.latent)],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovgeoRow {
    pub i: usize,
    pub j: usize,
    pub euclidean: f64,
    /// One-sided estimate with the frame at `i`.
    pub corrected_i: f64,
    /// One-sided estimate with the frame at `j`.
    pub corrected_j: f64,
}

impl CovgeoRow {
    /// The symmetric edge weight used by the corrected distance graph.
    pub fn edge(&self) -> f64 {
        0.5 * (self.corrected_i + self.corrected_j)
    }
}

/// Both one-sided corrected estimates for every pair `i < j` within `h`,
/// with frames of radius `h_bar`.
pub fn covgeo_rows(cloud: &PointCloud, h: f64, h_bar: f64, d: usize) -> manicov::Result<Vec<CovgeoRow>> {
    let n = cloud.len();
    let nbrs = (0..n)
        .into_par_iter()
        .map(|i| radius_neighbors(cloud, i, h).map(|nb| nb.indices))
        .collect::<manicov::Result<Vec<_>>>()?;
    let frames: Vec<Option<TangentFrame>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if nbrs[i].is_empty() {
                Ok(None)
            } else {
                frame_at(cloud, i, h_bar, d).map(Some)
            }
        })
        .collect::<manicov::Result<_>>()?;
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            nbrs[i]
                .iter()
                .filter(|&&j| j > i)
                .map(|&j| {
                    let (fi, fj) = (frames[i].as_ref().unwrap(), frames[j].as_ref().unwrap());
                    let a = corrected_distance(cloud, i, j, fi)?;
                    let b = corrected_distance(cloud, j, i, fj)?;
                    Ok(CovgeoRow {
                        i,
                        j,
                        euclidean: a.euclidean,
                        corrected_i: a.corrected,
                        corrected_j: b.corrected,
                    })
                })
                .collect::<manicov::Result<Vec<_>>>()
        })
        .collect::<manicov::Result<Vec<_>>>()?;
    Ok(rows.concat())
}

pub fn covgeo(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let cloud = input_cloud(cfg)?;
    let h_bar = cfg.h_bar.unwrap_or(cfg.h);
    let rows = covgeo_rows(&cloud, cfg.h, h_bar, cfg.d)?;
    let mut t = table_for(cfg, "covgeo", &["i", "j", "euclidean", "corrected_i", "corrected_j", "edge_weight"]);
    t.meta("pair_rule", "all i < j with |x_i - x_j| <= h");
    t.meta_float("frame_radius", h_bar);
    for r in &rows {
        t.push(vec![
            r.i.into(),
            r.j.into(),
            r.euclidean.into(),
            r.corrected_i.into(),
            r.corrected_j.into(),
            r.edge().into(),
        ]);
    }
    Ok(t)
}

fn latent_dim(kind: ManifoldKind) -> usize {
    match kind {
        ManifoldKind::Sphere { d } => d + 1,
        _ => 1,
    }
}

/// Reads integer index pairs, one pair per row.
fn load_pairs(path: &Path, n: usize) -> Result<Vec<(usize, usize)>, CliError> {
    let raw = load(path, "pairs")?;
    let bad = |row: usize, msg: String| {
        CliError::input(
            format!("reading pairs {}", path.display()),
            manicov::Error::FormatError { line: row + 1, message: msg },
        )
    };
    if raw.dim() != 2 {
        return Err(bad(0, format!("expected 2 columns, found {}", raw.dim())));
    }
    raw.points()
        .enumerate()
        .map(|(row, p)| {
            let idx = |v: f64| -> Result<usize, CliError> {
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(bad(row, format!("`{v}` is not a point index")));
                }
                let k = v as usize;
                if k >= n {
                    return Err(CliError::input(
                        format!("reading pairs {}", path.display()),
                        manicov::Error::IndexError { index: k, len: n },
                    ));
                }
                Ok(k)
            };
            Ok((idx(p[0])?, idx(p[1])?))
        })
        .collect()
}

/// EIG distances for given pairs (or every pair within `eps` in the latent
/// space); the ellipsoids come from the supplied latent coordinates.
pub fn eig_dist(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let observed = input_cloud(cfg)?;
    let latent_path = cfg.latent.as_deref().expect("validated: latent is set");
    let latent = load(latent_path, "latent")?;
    let expected = latent_dim(cfg.manifold);
    if latent.dim() != expected || latent.len() != observed.len() {
        return Err(CliError::input(
            format!("reading latent {}", latent_path.display()),
            manicov::Error::InvalidInput(format!(
                "{} latent rows need {} points with {expected} coordinates, got {} with {}",
                cfg.manifold.name(),
                observed.len(),
                latent.len(),
                latent.dim()
            )),
        ));
    }
    let sample = ManifoldSample {
        cloud: observed.clone(),
        latent,
        kind: cfg.manifold,
        seed: cfg.seed,
    };
    let data = DeformedDataset::from_parts(sample, observed, Deformation::Identity)?;
    let n = data.len();
    let pairs = match &cfg.pairs {
        Some(path) => load_pairs(path, n)?,
        None => (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let data = &data;
                (i + 1..n).filter(move |&j| data.latent.geodesic(i, j) <= cfg.eps).map(move |j| (i, j))
            })
            .collect(),
    };
    let params = EigParams::new(cfg.alpha, cfg.eps)?;
    let mut t = table_for(cfg, "eig_dist", &["i", "j", "latent_t", "eig", "error"]);
    t.meta("pair_rule", if cfg.pairs.is_some() { "pairs file" } else { "all i < j with latent distance <= eps" });
    t.meta("neighborhoods", "latent geodesic eps-balls (the observation map is treated as unknown)");
    for ((i, j), r) in eig_distance_matrix(&data, &pairs, params) {
        let (value, error) = match r {
            Ok(v) => (v, String::new()),
            Err(e) => (f64::NAN, e.to_string()),
        };
        t.push(vec![i.into(), j.into(), data.latent.geodesic(i, j).into(), value.into(), error.into()]);
    }
    Ok(t)
}

/// LLE (`lle`) or LDR-LLE (`ldr-lle`) embedding coordinates; the LDR-LLE
/// run also reports the rescaled Laplacian spectrum.
pub fn lle(cfg: &ExperimentConfig) -> Result<Vec<ResultTable>, CliError> {
    let cloud = input_cloud(cfg)?;
    let (variant, stem) = match cfg.command {
        Command::LdrLle => (WeightVariant::Truncated(cfg.d), "ldr_lle"),
        _ => (
            WeightVariant::Regularized(cfg.c.map_or(Regularization::default(), Regularization::Fixed)),
            "lle",
        ),
    };
    let w = assemble_lle_matrix(&cloud, neighbor_scale(cfg), variant)?;
    let emb = embed(&w, cfg.ell, cfg.seed)?;
    let mut columns = vec!["index".to_string()];
    columns.extend((1..=cfg.ell).map(|k| format!("coord_{k}")));
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut coords = table_for(cfg, &format!("{stem}_embedding"), &column_refs);
    coords.meta(
        "spectrum",
        emb.spectrum.iter().map(|v| manicov::pointcloud::format_float(*v)).collect::<Vec<_>>().join(","),
    );
    coords.meta("trivial_column", emb.trivial_column.map_or("none".to_string(), |c| (c + 1).to_string()));
    coords.meta_float("max_residual", emb.max_residual);
    for i in 0..cloud.len() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(emb.coordinates.row(i).iter().map(|&v| Cell::Float(v)));
        coords.push(row);
    }
    let mut tables = vec![coords];
    if cfg.command == Command::LdrLle {
        let k = cfg.k_eigs.min(cloud.len());
        let spec = laplacian_eigenvalues(&w, cfg.h, cfg.d, k)?;
        let mut t = table_for(cfg, "ldr_lle_spectrum", &["index", "eigenvalue"]);
        t.meta("operator", "real parts of eigenvalues of (2(d+2)/h^2)(I - W)");
        t.meta_float("max_imag", spec.max_imag);
        for (m, v) in spec.values.iter().enumerate() {
            t.push(vec![(m + 1).into(), (*v).into()]);
        }
        tables.push(t);
    }
    Ok(tables)
}

pub fn dm(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let cloud = input_cloud(cfg)?;
    let k = cfg.k_eigs.min(cloud.len());
    let spec = diffusion_maps_eigenvalues(&cloud, cfg.h, cfg.dm_alpha, k, cfg.seed)?;
    let mut t = table_for(cfg, "dm_spectrum", &["index", "eigenvalue", "markov"]);
    t.meta("operator", "(1 - mu) * 4/h^2, Gaussian kernel exp(-r^2/h^2)");
    for (m, (v, mu)) in spec.values.iter().zip(&spec.markov).enumerate() {
        t.push(vec![(m + 1).into(), (*v).into(), (*mu).into()]);
    }
    Ok(t)
}
