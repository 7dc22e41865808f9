//! Local geodesic estimates from chords, with and without the normal-space
//! correction, and global geodesics as shortest paths over local edges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::covariance::{frame_at, project_normal, TangentFrame};
use crate::error::{Error, Result};
use crate::pointcloud::{radius_neighbors, PointCloud};

/// Chords shorter than this are treated as coincident points.
pub const MIN_CHORD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicEstimate {
    pub i: usize,
    pub j: usize,
    /// Chord length `h = ‖x_j − x_i‖`.
    pub euclidean: f64,
    /// `h + ‖P⊥(x_j − x_i)‖² / (6h)`.
    pub corrected: f64,
    /// Radius of the neighborhood the frame was estimated from.
    pub frame_scale: f64,
}

/// Corrected estimate of the geodesic from `i` to `j`, with the normal
/// projector taken from `frame` (which must be centered at `i`).
pub fn corrected_distance(cloud: &PointCloud, i: usize, j: usize, frame: &TangentFrame) -> Result<GeodesicEstimate> {
    cloud.check_index(i)?;
    cloud.check_index(j)?;
    if i == j {
        return Err(Error::InvalidInput(format!("distance from point {i} to itself requested")));
    }
    if frame.center != i {
        return Err(Error::InvalidInput(format!(
            "frame is centered at {}, expected {i}",
            frame.center
        )));
    }
    let delta = cloud.difference(j, i);
    let h = delta.norm();
    if h < MIN_CHORD {
        return Err(Error::DegenerateDistance { i, j });
    }
    let normal = project_normal(frame, &delta)?;
    Ok(GeodesicEstimate {
        i,
        j,
        euclidean: h,
        corrected: h + normal.norm_squared() / (6.0 * h),
        frame_scale: frame.scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeEstimator {
    Euclidean,
    Corrected,
}

/// Undirected weighted graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl DistanceGraph {
    /// Builds a graph from undirected edges. Weights must be finite; a
    /// repeated edge keeps its last weight.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            for v in [i, j] {
                if v >= n {
                    return Err(Error::IndexError { index: v, len: n });
                }
            }
            if i == j {
                return Err(Error::InvalidInput(format!("self-loop at node {i}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidInput(format!("edge ({i}, {j}) has non-finite weight")));
            }
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for list in &mut adjacency {
            list.reverse();
            list.sort_by_key(|&(v, _)| v);
            list.dedup_by_key(|&mut (v, _)| v);
        }
        Ok(DistanceGraph { adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Each undirected edge once, as `(i, j, w)` with `i < j`, in index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&(j, _)| j > i).map(move |&(j, w)| (i, j, w)))
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let list = self.adjacency.get(i)?;
        list.binary_search_by_key(&j, |&(v, _)| v).ok().map(|k| list[k].1)
    }
}

/// Edge for every pair within `scale`, weighted by chord length or by the
/// average of the two one-sided corrected estimates. Frames use radius
/// `scale` and are computed once per point.
pub fn build_local_graph(cloud: &PointCloud, scale: f64, estimator: EdgeEstimator, d: usize) -> Result<DistanceGraph> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidInput(format!("graph scale must be positive, got {scale}")));
    }
    let n = cloud.len();
    let neighborhoods = (0..n)
        .into_par_iter()
        .map(|i| radius_neighbors(cloud, i, scale).map(|nb| nb.indices))
        .collect::<Result<Vec<_>>>()?;

    let frames: Vec<Option<TangentFrame>> = match estimator {
        EdgeEstimator::Euclidean => vec![None; n],
        EdgeEstimator::Corrected => (0..n)
            .into_par_iter()
            .map(|i| {
                if neighborhoods[i].is_empty() {
                    Ok(None)
                } else {
                    frame_at(cloud, i, scale, d).map(Some).map_err(|e| e.at(i))
                }
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for &j in neighborhoods[i].iter().filter(|&&j| j > i) {
                let w = match (&frames[i], &frames[j]) {
                    (Some(fi), Some(fj)) => {
                        let a = corrected_distance(cloud, i, j, fi)?;
                        let b = corrected_distance(cloud, j, i, fj)?;
                        0.5 * (a.corrected + b.corrected)
                    }
                    _ => {
                        let h = cloud.distance(i, j);
                        if h < MIN_CHORD {
                            return Err(Error::DegenerateDistance { i, j });
                        }
                        h
                    }
                };
                row.push((i, j, w));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    DistanceGraph::from_edges(n, &rows.concat())
}

#[derive(Debug, PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Reversed so that the max-heap pops the nearest node first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `source`; unreachable nodes get `f64::INFINITY`.
pub fn shortest_paths(graph: &DistanceGraph, source: usize) -> Result<Vec<f64>> {
    let n = graph.node_count();
    if source >= n {
        return Err(Error::IndexError { index: source, len: n });
    }
    if let Some((i, j, w)) = graph.edges().find(|&(_, _, w)| w < 0.0) {
        return Err(Error::InvalidInput(format!("edge ({i}, {j}) has negative weight {w}")));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier { dist: 0.0, node: source });
    while let Some(Frontier { dist: du, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in graph.neighbors(u) {
            let alt = du + w;
            if alt < dist[v] {
                dist[v] = alt;
                heap.push(Frontier { dist: alt, node: v });
            }
        }
    }
    Ok(dist)
}

/// [`shortest_paths`] for several sources, in the order given.
pub fn shortest_paths_from(graph: &DistanceGraph, sources: &[usize]) -> Result<Vec<Vec<f64>>> {
    sources.par_iter().map(|&s| shortest_paths(graph, s)).collect()
}
