use manicov::covariance::{frame_at, FrameStatus};
use manicov::eig::log_log_slope;
use manicov::geodesic::{build_local_graph, corrected_distance, shortest_paths_from, EdgeEstimator};
use manicov::pointcloud::radius_neighbors;
use manicov::rng::SeededRng;
use rayon::prelude::*;

use super::{mean, median, sample_manifold, sample_meta, table_for};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::table::ResultTable;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalPair {
    pub i: usize,
    pub j: usize,
    pub true_t: f64,
    pub euclid_h: f64,
    pub corrected: f64,
}

impl LocalPair {
    pub fn euclid_err(&self) -> f64 {
        (self.euclid_h - self.true_t).abs()
    }

    pub fn corrected_err(&self) -> f64 {
        (self.corrected - self.true_t).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPair {
    pub source: usize,
    pub target: usize,
    pub dijkstra_euclid: f64,
    pub dijkstra_corrected: f64,
    pub true_t: f64,
}

#[derive(Debug, Clone)]
pub struct SpiralReport {
    /// Point whose latent parameter is the sample median.
    pub reference: usize,
    pub reference_param: f64,
    pub frame_radius: f64,
    pub frame_degenerate: bool,
    pub local: Vec<LocalPair>,
    pub global: Vec<GlobalPair>,
    sample_meta: Vec<(String, String)>,
}

impl SpiralReport {
    /// Median absolute errors `(euclidean, corrected)` over the local pairs.
    pub fn local_medians(&self) -> (f64, f64) {
        (
            median(self.local.iter().map(LocalPair::euclid_err)),
            median(self.local.iter().map(LocalPair::corrected_err)),
        )
    }

    /// Mean absolute errors `(euclidean, corrected)` of the shortest paths.
    pub fn global_means(&self) -> (f64, f64) {
        (
            mean(self.global.iter().map(|g| (g.dijkstra_euclid - g.true_t).abs())),
            mean(self.global.iter().map(|g| (g.dijkstra_corrected - g.true_t).abs())),
        )
    }

    pub fn tables(&self, cfg: &ExperimentConfig) -> Vec<ResultTable> {
        let mut local = table_for(
            cfg,
            "spiral_geodesic_local",
            &["pair", "true_t", "euclid_h", "euclid_err", "corrected", "corrected_err"],
        );
        let mut global = table_for(
            cfg,
            "spiral_geodesic_global",
            &["source", "target", "dijkstra_euclid", "dijkstra_corrected", "true_t"],
        );
        let (me, mc) = self.local_medians();
        let (ge, gc) = self.global_means();
        for t in [&mut local, &mut global] {
            for (k, v) in &self.sample_meta {
                t.meta(k, v);
            }
            t.meta("reference_point", self.reference);
            t.meta_float("reference_param", self.reference_param);
            t.meta("reference_rule", "point with the median latent parameter; all pairs within eps of it");
            t.meta_float("frame_radius", self.frame_radius);
            t.meta("frame_degenerate", self.frame_degenerate);
            t.meta("pair_stream", "SeededRng(seed + 1)");
        }
        local.meta_float("median_euclid_err", me);
        local.meta_float("median_corrected_err", mc);
        global.meta_float("mean_euclid_err", ge);
        global.meta_float("mean_corrected_err", gc);
        for p in &self.local {
            local.push(vec![
                format!("{}-{}", p.i, p.j).into(),
                p.true_t.into(),
                p.euclid_h.into(),
                p.euclid_err().into(),
                p.corrected.into(),
                p.corrected_err().into(),
            ]);
        }
        for g in &self.global {
            global.push(vec![
                g.source.into(),
                g.target.into(),
                g.dijkstra_euclid.into(),
                g.dijkstra_corrected.into(),
                g.true_t.into(),
            ]);
        }
        vec![local, global]
    }
}

/// Local chord and corrected estimates around the median point of a curve,
/// then shortest paths over `eps`-graphs with both edge estimators.
pub fn spiral_geodesic(cfg: &ExperimentConfig) -> Result<SpiralReport, CliError> {
    let m = sample_manifold(cfg.manifold, cfg.n, cfg.seed)?;
    let cloud = &m.cloud;
    let n = m.len();
    let frame_radius = cfg.h_bar.unwrap_or(cfg.eps);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m.latent.point(a)[0].total_cmp(&m.latent.point(b)[0]));
    let reference = order[(n - 1) / 2];
    let frame = frame_at(cloud, reference, frame_radius, cfg.d)?;
    let local = radius_neighbors(cloud, reference, cfg.eps)?
        .indices
        .into_iter()
        .map(|j| {
            let est = corrected_distance(cloud, reference, j, &frame)?;
            Ok(LocalPair {
                i: reference,
                j,
                true_t: m.geodesic(reference, j),
                euclid_h: est.euclidean,
                corrected: est.corrected,
            })
        })
        .collect::<manicov::Result<Vec<_>>>()?;

    let mut rng = SeededRng::new(cfg.seed.wrapping_add(1));
    let pairs: Vec<(usize, usize)> = (0..cfg.num_pairs)
        .map(|_| {
            let s = rng.index(n);
            let mut t = rng.index(n - 1);
            if t >= s {
                t += 1;
            }
            (s, t)
        })
        .collect();
    let sources: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let euclid = build_local_graph(cloud, cfg.eps, EdgeEstimator::Euclidean, cfg.d)?;
    let corrected = build_local_graph(cloud, cfg.eps, EdgeEstimator::Corrected, cfg.d)?;
    let de = shortest_paths_from(&euclid, &sources)?;
    let dc = shortest_paths_from(&corrected, &sources)?;
    let global = pairs
        .iter()
        .enumerate()
        .map(|(k, &(s, t))| GlobalPair {
            source: s,
            target: t,
            dijkstra_euclid: de[k][t],
            dijkstra_corrected: dc[k][t],
            true_t: m.geodesic(s, t),
        })
        .collect();

    Ok(SpiralReport {
        reference,
        reference_param: m.latent.point(reference)[0],
        frame_radius,
        frame_degenerate: matches!(frame.status, FrameStatus::Degenerate { .. }),
        local,
        global,
        sample_meta: sample_meta(&m),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub h_bar: f64,
    pub pairs: usize,
    pub euclid_rms: f64,
    pub corrected_rms: f64,
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    /// Log-log slopes of RMS error against `h̄`.
    pub euclid_slope: Option<f64>,
    pub corrected_slope: Option<f64>,
    pub band: f64,
}

/// Pairs count toward scale `h̄` when their chord lies in `[(1 − BAND) h̄, h̄]`.
const RATE_BAND: f64 = 0.1;

impl RateReport {
    pub fn table(&self, cfg: &ExperimentConfig) -> ResultTable {
        let mut t = table_for(cfg, "geodesic_rates", &["h_bar", "pairs", "euclid_rms", "corrected_rms"]);
        t.meta("pair_rule", format!("every center, chords in [{}*h_bar, h_bar], frame radius h_bar", 1.0 - self.band));
        t.meta_float("euclid_slope", self.euclid_slope.unwrap_or(f64::NAN));
        t.meta_float("corrected_slope", self.corrected_slope.unwrap_or(f64::NAN));
        for r in &self.rows {
            t.push(vec![r.h_bar.into(), r.pairs.into(), r.euclid_rms.into(), r.corrected_rms.into()]);
        }
        t
    }
}

/// RMS error of both estimators as `h ≈ h̄` shrinks. Every point is a
/// center, with its own sample-covariance frame of radius `h̄`.
pub fn geodesic_rates(cfg: &ExperimentConfig) -> Result<RateReport, CliError> {
    let m = sample_manifold(cfg.manifold, cfg.n, cfg.seed)?;
    let cloud = &m.cloud;
    let mut rows = Vec::new();
    for &h_bar in &cfg.h_bar_list {
        let lo = (1.0 - RATE_BAND) * h_bar;
        let per_center: Vec<Vec<(f64, f64)>> = (0..m.len())
            .into_par_iter()
            .map(|i| -> manicov::Result<Vec<(f64, f64)>> {
                let nbrs = radius_neighbors(cloud, i, h_bar)?;
                let far: Vec<usize> = nbrs.indices.into_iter().filter(|&j| cloud.distance(i, j) >= lo).collect();
                if far.is_empty() {
                    return Ok(Vec::new());
                }
                let frame = frame_at(cloud, i, h_bar, cfg.d)?;
                far.into_iter()
                    .map(|j| {
                        let est = corrected_distance(cloud, i, j, &frame)?;
                        let t = m.geodesic(i, j);
                        Ok(((est.euclidean - t).powi(2), (est.corrected - t).powi(2)))
                    })
                    .collect()
            })
            .collect::<manicov::Result<_>>()?;
        let sq: Vec<(f64, f64)> = per_center.into_iter().flatten().collect();
        rows.push(RateRow {
            h_bar,
            pairs: sq.len(),
            euclid_rms: mean(sq.iter().map(|e| e.0)).sqrt(),
            corrected_rms: mean(sq.iter().map(|e| e.1)).sqrt(),
        });
    }
    let fit = |f: fn(&RateRow) -> f64| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.pairs > 0 && f(r) > 0.0)
            .map(|r| (r.h_bar.ln(), f(r).ln()))
            .collect();
        log_log_slope(&pts)
    };
    Ok(RateReport {
        euclid_slope: fit(|r| r.euclid_rms),
        corrected_slope: fit(|r| r.corrected_rms),
        rows,
        band: RATE_BAND,
    })
}
