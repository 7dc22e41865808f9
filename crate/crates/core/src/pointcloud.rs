//! Point clouds, CSV ingestion, and exact neighbor search.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// An immutable set of `n` points in ℝᵖ, stored row-per-point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    n: usize,
    p: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates.
    pub fn from_rows(n: usize, p: usize, coords: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput(format!("point cloud must have n >= 1 and p >= 1, got {n}x{p}")));
        }
        if coords.len() != n * p {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates for {n} points in R^{p}, got {}",
                n * p,
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate at point {}, dimension {}",
                pos / p,
                pos % p
            )));
        }
        Ok(PointCloud { n, p, coords })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let p = points.first().map_or(0, Vec::len);
        if let Some(bad) = points.iter().position(|pt| pt.len() != p) {
            return Err(Error::InvalidInput(format!("point {bad} has {} coordinates, expected {p}", points[bad].len())));
        }
        Self::from_rows(points.len(), p, points.concat())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.p..(i + 1) * self.p]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.p)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn point_vector(&self, i: usize) -> DVector<f64> {
        DVector::from_column_slice(self.point(i))
    }

    /// `x_j - x_i`.
    pub fn difference(&self, j: usize, i: usize) -> DVector<f64> {
        DVector::from_iterator(self.p, self.point(j).iter().zip(self.point(i)).map(|(a, b)| a - b))
    }

    pub fn distance_sq(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distance_sq(i, j).sqrt()
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::IndexError { index: i, len: self.n })
        }
    }

    /// Applies `f` to every point, producing a cloud in ℝ^`q`.
    pub fn map_points(&self, q: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<PointCloud> {
        let mut coords = Vec::with_capacity(self.n * q);
        for (i, pt) in self.points().enumerate() {
            let image = f(pt);
            if image.len() != q {
                return Err(Error::InvalidInput(format!("map produced {} coordinates at point {i}, expected {q}", image.len())));
            }
            coords.extend(image);
        }
        PointCloud::from_rows(self.n, q, coords)
    }

    /// Appends zero coordinates up to dimension `p_new`.
    pub fn zero_pad(&self, p_new: usize) -> Result<PointCloud> {
        if p_new < self.p {
            return Err(Error::InvalidInput(format!("cannot pad R^{} down to R^{p_new}", self.p)));
        }
        self.map_points(p_new, |x| {
            let mut v = x.to_vec();
            v.resize(p_new, 0.0);
            v
        })
    }

    /// Applies `x ↦ R x + t` to every point.
    pub fn rigid_motion(&self, rotation: &DMatrix<f64>, translation: &[f64]) -> Result<PointCloud> {
        if rotation.nrows() != self.p || rotation.ncols() != self.p || translation.len() != self.p {
            return Err(Error::InvalidInput("rigid motion dimensions do not match the cloud".into()));
        }
        self.map_points(self.p, |x| {
            let v = rotation * DVector::from_column_slice(x);
            v.iter().zip(translation).map(|(a, b)| a + b).collect()
        })
    }

    /// Reorders points so that new point `k` is old point `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<PointCloud> {
        if perm.len() != self.n {
            return Err(Error::InvalidInput("permutation length does not match the cloud".into()));
        }
        let mut coords = Vec::with_capacity(self.coords.len());
        for &src in perm {
            self.check_index(src)?;
            coords.extend_from_slice(self.point(src));
        }
        PointCloud::from_rows(self.n, self.p, coords)
    }
}

/// How a neighborhood was selected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighborMode {
    /// Closed Euclidean ball of radius `h`.
    Radius(f64),
    /// The `k` nearest points, ties broken by smaller index.
    Knn(usize),
    /// Closed ball of radius `eps` under an external (latent) geodesic oracle.
    Geodesic(f64),
}

/// Neighbors of `center`, excluding the center itself, in ascending index order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub center: usize,
    pub indices: Vec<usize>,
    pub mode: NeighborMode,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// All `j ≠ center` with `‖x_j − x_center‖ ≤ h`.
pub fn radius_neighbors(cloud: &PointCloud, center: usize, h: f64) -> Result<NeighborSet> {
    cloud.check_index(center)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("radius must be positive and finite, got {h}")));
    }
    let h2 = h * h;
    let indices = (0..cloud.len())
        .filter(|&j| j != center && cloud.distance_sq(center, j) <= h2)
        .collect();
    Ok(NeighborSet {
        center,
        indices,
        mode: NeighborMode::Radius(h),
    })
}

/// The `k` nearest points to `center`, ties at equal distance broken by index.
pub fn knn_neighbors(cloud: &PointCloud, center: usize, k: usize) -> Result<NeighborSet> {
    cloud.check_index(center)?;
    if k == 0 || k >= cloud.len() {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 1 <= k <= n-1 = {}, got {k}",
            cloud.len() - 1
        )));
    }
    let mut cand: Vec<(f64, usize)> = (0..cloud.len())
        .filter(|&j| j != center)
        .map(|j| (cloud.distance_sq(center, j), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    cand.select_nth_unstable_by(k - 1, cmp);
    let mut indices: Vec<usize> = cand[..k].iter().map(|&(_, j)| j).collect();
    indices.sort_unstable();
    Ok(NeighborSet {
        center,
        indices,
        mode: NeighborMode::Knn(k),
    })
}

/// Radius neighborhoods of every point, computed in parallel.
pub fn all_radius_neighbors(cloud: &PointCloud, h: f64) -> Result<Vec<NeighborSet>> {
    (0..cloud.len())
        .into_par_iter()
        .map(|i| radius_neighbors(cloud, i, h))
        .collect()
}

pub fn all_knn_neighbors(cloud: &PointCloud, k: usize) -> Result<Vec<NeighborSet>> {
    (0..cloud.len())
        .into_par_iter()
        .map(|i| knn_neighbors(cloud, i, k))
        .collect()
}

/// Reads a headerless comma-separated file, one point per row.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PointCloud> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_csv(&text)
}

/// Parses the headerless CSV point format. Line and column numbers in errors are 1-based.
pub fn parse_csv(text: &str) -> Result<PointCloud> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut p = 0usize;
    let mut n = 0usize;
    let mut coords = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::FormatError {
            line: e.position().map_or(0, |pos| pos.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(n + 1, |pos| pos.line() as usize);
        if n == 0 {
            p = record.len();
        } else if record.len() != p {
            return Err(Error::FormatError {
                line,
                message: format!("expected {p} columns, found {}", record.len()),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::ParseError { line, column: col + 1 })?;
            if !value.is_finite() {
                return Err(Error::ParseError { line, column: col + 1 });
            }
            coords.push(value);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::FormatError {
            line: 1,
            message: "file contains no points".into(),
        });
    }
    PointCloud::from_rows(n, p, coords)
}

/// Formats a float with 17 significant digits, enough to round-trip exactly.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Writes rows of numbers in the headerless CSV format.
pub fn write_rows_csv<'a>(path: impl AsRef<Path>, rows: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_csv(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    write_rows_csv(path, cloud.points())
}
