//! Discretized base manifolds.
//!
//! A [`ManifoldSample`] is a finite point set in ambient space together with
//! an orthonormal basis of the tangent space at each point and a symmetric
//! neighbor graph. Spheres come from a Fibonacci lattice or a point file;
//! circles are equispaced.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Neighbor count used for sphere graphs.
pub const DEFAULT_NEIGHBORS: usize = 6;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("point {index} has norm {norm}, not within 1e-6 of the unit sphere")]
    NotOnSphere { index: usize, norm: f64 },
    #[error("invalid sample: {0}")]
    Invalid(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFormat {
    /// One point per line, three comma- or whitespace-separated coordinates.
    CsvXyz,
}

/// Point sample of a manifold with tangent bases and a neighbor graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSample {
    points: Vec<DVector<f64>>,
    tangent_bases: Vec<DMatrix<f64>>,
    edges: Vec<(usize, usize)>,
    pub label: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct SampleDoc {
    points: Vec<Vec<f64>>,
    tangent_bases: Vec<Vec<Vec<f64>>>,
    edges: Vec<(usize, usize)>,
    labels: Option<String>,
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix rows".into());
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

impl ManifoldSample {
    /// Assemble and validate a sample. Edges may be given in either
    /// orientation and with duplicates; they are stored once, as `(i, j)` with
    /// `i < j`.
    pub fn new(
        points: Vec<DVector<f64>>,
        tangent_bases: Vec<DMatrix<f64>>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        label: Option<String>,
    ) -> Result<Self, SampleError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(SampleError::Invalid(format!("self-loop at {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let sample = Self { points, tangent_bases, edges: set.into_iter().collect(), label };
        sample.validate()?;
        Ok(sample)
    }

    /// Check orthonormal tangent bases, consistent dimensions and in-range edges.
    pub fn validate(&self) -> Result<(), SampleError> {
        let n = self.points.len();
        if n == 0 {
            return Err(SampleError::Invalid("empty sample".into()));
        }
        if self.tangent_bases.len() != n {
            return Err(SampleError::Invalid(format!(
                "{} tangent bases for {n} points",
                self.tangent_bases.len()
            )));
        }
        let m = self.points[0].len();
        let k = self.tangent_bases[0].nrows();
        for (i, (p, t)) in self.points.iter().zip(&self.tangent_bases).enumerate() {
            if p.len() != m || t.shape() != (k, m) {
                return Err(SampleError::Invalid(format!("inconsistent dimensions at point {i}")));
            }
            let gram = t * t.transpose();
            let dev = (gram - DMatrix::<f64>::identity(k, k)).amax();
            if !(dev <= 1e-10) {
                return Err(SampleError::Invalid(format!(
                    "tangent basis at point {i} is not orthonormal (deviation {dev:e})"
                )));
            }
        }
        for &(a, b) in &self.edges {
            if a >= n || b >= n || a == b {
                return Err(SampleError::Invalid(format!("bad edge ({a}, {b})")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ambient dimension m.
    pub fn ambient_dim(&self) -> usize {
        self.points[0].len()
    }

    /// Intrinsic (tangent) dimension.
    pub fn intrinsic_dim(&self) -> usize {
        self.tangent_bases[0].nrows()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &DVector<f64> {
        &self.points[i]
    }

    /// Row-orthonormal k×m tangent basis at point `i`.
    pub fn tangent_basis(&self, i: usize) -> &DMatrix<f64> {
        &self.tangent_bases[i]
    }

    /// Undirected edges, each stored once as `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Replace the tangent bases, keeping points and edges.
    pub fn with_tangent_bases(&self, bases: Vec<DMatrix<f64>>) -> Result<Self, SampleError> {
        let out = Self { tangent_bases: bases, ..self.clone() };
        out.validate()?;
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String, SampleError> {
        let doc = SampleDoc {
            points: self.points.iter().map(|p| p.iter().copied().collect()).collect(),
            tangent_bases: self.tangent_bases.iter().map(matrix_rows).collect(),
            edges: self.edges.clone(),
            labels: self.label.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self, SampleError> {
        let doc: SampleDoc = serde_json::from_str(text)?;
        let bases = doc
            .tangent_bases
            .iter()
            .map(|rows| matrix_from_rows(rows))
            .collect::<Result<Vec<_>, _>>()
            .map_err(SampleError::Invalid)?;
        Self::new(
            doc.points.into_iter().map(DVector::from_vec).collect(),
            bases,
            doc.edges,
            doc.labels,
        )
    }
}

/// Raw Fibonacci-lattice points on the unit sphere.
pub fn fibonacci_points(count: usize) -> Vec<Vector3<f64>> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// `count` near-uniform points on the sphere of the given radius, with
/// tangent bases and a 6-nearest-neighbor graph.
pub fn fibonacci_sphere(count: usize, radius: f64) -> Result<ManifoldSample, SampleError> {
    if count < 4 {
        return Err(SampleError::Domain(format!("need at least 4 sphere points, got {count}")));
    }
    if !(radius > 0.0) {
        return Err(SampleError::Domain(format!("radius must be positive, got {radius}")));
    }
    sphere_sample(fibonacci_points(count), radius, Some(format!("fibonacci-sphere-{count}")))
}

fn sphere_sample(
    unit_points: Vec<Vector3<f64>>,
    radius: f64,
    label: Option<String>,
) -> Result<ManifoldSample, SampleError> {
    let bases = unit_points
        .par_iter()
        .map(tangent_basis_sphere)
        .collect::<Result<Vec<_>, _>>()?;
    let points: Vec<DVector<f64>> =
        unit_points.iter().map(|p| DVector::from_column_slice((p * radius).as_slice())).collect();
    let neighbors = DEFAULT_NEIGHBORS.min(points.len() - 1);
    let edges = if neighbors == 0 { Vec::new() } else { knn_graph(&points, neighbors)? };
    ManifoldSample::new(points, bases, edges, label)
}

/// Orthonormal basis of the tangent plane at a unit vector `p`.
///
/// Takes the coordinate axis least aligned with `p` (lowest index on ties),
/// projects it onto the tangent plane for the first row, and completes with
/// `p × t₁`.
pub fn tangent_basis_sphere(p: &Vector3<f64>) -> Result<DMatrix<f64>, SampleError> {
    let norm = p.norm();
    if !((norm - 1.0).abs() <= 1e-6) {
        return Err(SampleError::Domain(format!("point norm {norm} is not 1 within 1e-6")));
    }
    let p = p / norm;
    let mut axis = 0;
    for a in 1..3 {
        if p[a].abs() < p[axis].abs() {
            axis = a;
        }
    }
    let mut e = Vector3::zeros();
    e[axis] = 1.0;
    let t1 = (e - p * p[axis]).normalize();
    let t2 = p.cross(&t1);
    Ok(DMatrix::from_row_slice(2, 3, &[t1.x, t1.y, t1.z, t2.x, t2.y, t2.z]))
}

/// Symmetric union of every point's `neighbor_count` nearest neighbors.
/// Distance ties are broken by the lower index.
pub fn knn_graph(
    points: &[DVector<f64>],
    neighbor_count: usize,
) -> Result<Vec<(usize, usize)>, SampleError> {
    let n = points.len();
    if neighbor_count == 0 || n <= neighbor_count {
        return Err(SampleError::Domain(format!(
            "need 1 <= neighbor_count < N, got neighbor_count={neighbor_count}, N={n}"
        )));
    }
    let per_point: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| ((&points[i] - &points[j]).norm_squared(), j))
                .collect();
            let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            cand.select_nth_unstable_by(neighbor_count - 1, by_key);
            cand.truncate(neighbor_count);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    let mut set = BTreeSet::new();
    for (i, nbrs) in per_point.iter().enumerate() {
        for &j in nbrs {
            set.insert((i.min(j), i.max(j)));
        }
    }
    Ok(set.into_iter().collect())
}

/// `count` equispaced points on the unit circle with unit tangents and the
/// cycle graph.
pub fn circle_sample(count: usize) -> Result<ManifoldSample, SampleError> {
    if count < 3 {
        return Err(SampleError::Domain(format!("need at least 3 circle points, got {count}")));
    }
    let angle = |j: usize| 2.0 * std::f64::consts::PI * j as f64 / count as f64;
    let points = (0..count).map(|j| DVector::from_vec(vec![angle(j).cos(), angle(j).sin()])).collect();
    let bases = (0..count)
        .map(|j| DMatrix::from_row_slice(1, 2, &[-angle(j).sin(), angle(j).cos()]))
        .collect();
    let edges = (0..count).map(|j| (j, (j + 1) % count));
    ManifoldSample::new(points, bases, edges, Some(format!("circle-{count}")))
}

/// Read unit-sphere points from a file and attach tangent bases and the
/// 6-nearest-neighbor graph (fewer neighbors when the file has ≤ 6 points).
pub fn load_points(path: &Path, format: PointFormat) -> Result<ManifoldSample, SampleError> {
    let text = std::fs::read_to_string(path)?;
    let points = parse_points(&text, format)?;
    let label = path.file_name().map(|s| s.to_string_lossy().into_owned());
    sphere_sample(points, 1.0, label)
}

pub fn parse_points(text: &str, format: PointFormat) -> Result<Vec<Vector3<f64>>, SampleError> {
    let PointFormat::CsvXyz = format;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| SampleError::Parse { line: i + 1, message: e.to_string() })?;
        if coords.len() != 3 {
            return Err(SampleError::Parse {
                line: i + 1,
                message: format!("expected 3 coordinates, found {}", coords.len()),
            });
        }
        let p = Vector3::new(coords[0], coords[1], coords[2]);
        let norm = p.norm();
        if !((norm - 1.0).abs() <= 1e-6) {
            return Err(SampleError::NotOnSphere { index: points.len(), norm });
        }
        points.push(p / norm);
    }
    if points.is_empty() {
        return Err(SampleError::Parse { line: 0, message: "no points in file".into() });
    }
    Ok(points)
}
