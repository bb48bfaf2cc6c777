//! Spectral double covers of bundle frames.
//!
//! Where the i-th eigenvalue of the frame operator is simple at every point,
//! its eigenlines form a line bundle. Choosing the two unit vectors of each
//! line gives a double cover of the base, discretized here over the sample's
//! neighbor graph. A trivial cover means a consistent choice of unit
//! eigenvector, i.e. a nowhere-vanishing section; a connected cover is a
//! non-trivial class in `H¹(M; Z/2)`.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Rotation2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{BundleError, BundleFrame};
use crate::frame::{FrameError, RealFrame, Tolerance};
use crate::sampling::{self, SampleError};

/// Minimum `|⟨v_p, v_q⟩|` for an edge to be lifted.
pub const DEFAULT_ALIGN_TOL: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("eigenvalue {index} is not simple{}: relative gap {gap:e}", point.map(|p| format!(" at point {p}")).unwrap_or_default())]
    NotIGeneric { index: usize, point: Option<usize>, gap: f64 },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Smallest relative gap between `λ_i` (1-based) and its neighbors.
fn index_gap(values: &[f64], i: usize) -> f64 {
    let top = values[0];
    let norm = if top > 0.0 { top } else { 1.0 };
    let below = (i < values.len()).then(|| values[i - 1] - values[i]);
    let above = (i > 1).then(|| values[i - 2] - values[i - 1]);
    below.into_iter().chain(above).fold(f64::INFINITY, f64::min) / norm
}

/// Unit eigenvector of `σσᵀ` for its i-th largest eigenvalue (1-based), with
/// its first nonzero coordinate made positive. The line, not the sign, is
/// the meaningful output.
pub fn eigenline(frame: &RealFrame, i: usize, tol: &Tolerance) -> Result<DVector<f64>, SpectralError> {
    let k = frame.k();
    if i == 0 || i > k {
        return Err(FrameError::IndexOutOfRange { index: i, k }.into());
    }
    let eig = frame.frame_operator().eigen();
    let min_eigenvalue = eig.min_value();
    if !(min_eigenvalue > tol.abs_tol) {
        return Err(FrameError::NotAFrame { min_eigenvalue }.into());
    }
    let gap = index_gap(&eig.values, i);
    if !(gap > tol.rel_gap) {
        return Err(SpectralError::NotIGeneric { index: i, point: None, gap });
    }
    let mut v = eig.vectors.column(i - 1).into_owned();
    v /= v.norm();
    let scale = v.amax();
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
        if first < 0.0 {
            v = -v;
        }
    }
    Ok(v)
}

fn node(point: usize, positive: bool) -> usize {
    2 * point + usize::from(!positive)
}

/// The eigenline double cover over a sample's neighbor graph.
///
/// Node `2p` is `(p, +v_p)` and node `2p + 1` is `(p, −v_p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoverGraph {
    pub base_points: usize,
    /// 1-based spectral index.
    pub index: usize,
    pub align_tol: f64,
    /// Lift edges as node pairs `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Base edges where `|⟨v_p, v_q⟩| ≤ align_tol`.
    pub ambiguous_edges: Vec<(usize, usize)>,
    /// Component label of each node: the smallest node in its component.
    pub components: Vec<usize>,
}

impl SpectralCoverGraph {
    pub fn from_eigenlines(
        lines: &[DVector<f64>],
        base_edges: &[(usize, usize)],
        index: usize,
        align_tol: f64,
    ) -> Self {
        let n = lines.len();
        let mut edges = BTreeSet::new();
        let mut ambiguous_edges = Vec::new();
        for &(p, q) in base_edges {
            let a = lines[p].dot(&lines[q]);
            if a.abs() > align_tol {
                for s in [true, false] {
                    let (x, y) = (node(p, s), node(q, if a > 0.0 { s } else { !s }));
                    edges.insert((x.min(y), x.max(y)));
                }
            } else {
                ambiguous_edges.push((p, q));
            }
        }
        let edges: Vec<(usize, usize)> = edges.into_iter().collect();
        let components = label_components(2 * n, &edges);
        Self { base_points: n, index, align_tol, edges, ambiguous_edges, components }
    }

    pub fn node_count(&self) -> usize {
        2 * self.base_points
    }

    /// `(point, sign)` of a node.
    pub fn node(&self, id: usize) -> (usize, i8) {
        (id / 2, if id % 2 == 0 { 1 } else { -1 })
    }

    pub fn component_count(&self) -> usize {
        self.components.iter().enumerate().filter(|&(i, &c)| i == c).count()
    }

    /// Number of components of the base graph after removing ambiguous edges.
    pub fn base_component_count(&self) -> usize {
        let base: Vec<(usize, usize)> = self.edges.iter().map(|&(a, b)| (a / 2, b / 2)).collect();
        let labels = label_components(self.base_points, &base);
        labels.iter().enumerate().filter(|&(i, &c)| i == c).count()
    }

    /// Whether every base component lifts to two disjoint copies.
    pub fn is_trivial(&self) -> bool {
        self.component_count() == 2 * self.base_component_count()
    }

    /// Flipping every sign is an automorphism of the edge set.
    pub fn deck_invariant(&self) -> bool {
        let set: BTreeSet<(usize, usize)> = self.edges.iter().copied().collect();
        self.edges.iter().all(|&(a, b)| {
            let (x, y) = (a ^ 1, b ^ 1);
            set.contains(&(x.min(y), x.max(y)))
        })
    }

    /// Edges project to base edges, and no edge joins the two lifts of a point.
    pub fn lifts_are_consistent(&self, base_edges: &[(usize, usize)]) -> bool {
        let base: BTreeSet<(usize, usize)> = base_edges.iter().map(|&(p, q)| (p.min(q), p.max(q))).collect();
        self.edges.iter().all(|&(a, b)| {
            let (p, q) = (a / 2, b / 2);
            p != q && base.contains(&(p.min(q), p.max(q)))
        })
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            base_points: usize,
            index: usize,
            align_tol: f64,
            nodes: Vec<(usize, i8)>,
            edges: &'a [(usize, usize)],
            ambiguous_edges: &'a [(usize, usize)],
            components: &'a [usize],
            component_count: usize,
        }
        serde_json::to_string_pretty(&Doc {
            base_points: self.base_points,
            index: self.index,
            align_tol: self.align_tol,
            nodes: (0..self.node_count()).map(|i| self.node(i)).collect(),
            edges: &self.edges,
            ambiguous_edges: &self.ambiguous_edges,
            components: &self.components,
            component_count: self.component_count(),
        })
    }
}

/// BFS component labels, each the smallest node of its component.
fn label_components(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut label = vec![usize::MAX; n];
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if label[w] == usize::MAX {
                    label[w] = start;
                    queue.push_back(w);
                }
            }
        }
    }
    label
}

/// Eigenlines at every point in fiber coordinates, failing on the first point (in index order)
/// where eigenvalue `i` is not simple.
pub fn eigenlines(bundle: &BundleFrame, i: usize, tol: &Tolerance) -> Result<Vec<DVector<f64>>, SpectralError> {
    let results: Vec<Result<DVector<f64>, SpectralError>> =
        bundle.frames().par_iter().map(|f| eigenline(f, i, tol)).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(p, r)| {
            r.map_err(|e| match e {
                SpectralError::NotIGeneric { index, gap, .. } => SpectralError::NotIGeneric { index, point: Some(p), gap },
                other => other,
            })
        })
        .collect()
}

pub fn spectral_cover(bundle: &BundleFrame, i: usize, tol: &Tolerance) -> Result<SpectralCoverGraph, SpectralError> {
    spectral_cover_with(bundle, i, tol, DEFAULT_ALIGN_TOL)
}

pub fn spectral_cover_with(
    bundle: &BundleFrame,
    i: usize,
    tol: &Tolerance,
    align_tol: f64,
) -> Result<SpectralCoverGraph, SpectralError> {
    let mut lines = eigenlines(bundle, i, tol)?;
    let sample = bundle.sample();
    if bundle.k() == sample.intrinsic_dim() {
        // tangent-bundle frames: compare lines in the ambient space, since
        // the per-point tangent bases need not vary continuously
        lines = lines.iter().enumerate().map(|(p, v)| sample.tangent_basis(p).transpose() * v).collect();
    }
    Ok(SpectralCoverGraph::from_eigenlines(&lines, bundle.sample().edges(), i, align_tol))
}

fn circle_fixture(n: usize, angle: impl Fn(f64) -> f64) -> Result<BundleFrame, SpectralError> {
    if n < 8 || n % 2 != 0 {
        return Err(SpectralError::Domain(format!("fixture needs an even N ≥ 8, got {n}")));
    }
    let sample = Arc::new(sampling::circle_sample(n)?);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3f64.sqrt(), 2f64.sqrt()]));
    let frames = (0..n)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let r = Rotation2::new(angle(theta));
            let r = DMatrix::from_iterator(2, 2, r.matrix().iter().copied());
            RealFrame::new(r * &d)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BundleFrame::new(sample, frames)?)
}

/// Rank-2 frames over `circle_sample(n)` with operator spectrum (3, 2) whose
/// top eigenline at angle θ points along θ/2: the cover is connected.
pub fn mobius_fixture(n: usize) -> Result<BundleFrame, SpectralError> {
    circle_fixture(n, |theta| theta / 2.0)
}

/// As [`mobius_fixture`] with a constant top eigenline: the cover is trivial.
pub fn trivial_fixture(n: usize) -> Result<BundleFrame, SpectralError> {
    circle_fixture(n, |_| 0.0)
}

/// Topological facts about the continuum manifold, supplied by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldFlags {
    pub euler_nonzero: bool,
    pub h1_z2_trivial: bool,
}

impl ManifoldFlags {
    pub const SPHERE: ManifoldFlags = ManifoldFlags { euler_nonzero: true, h1_z2_trivial: true };
    pub const CIRCLE: ManifoldFlags = ManifoldFlags { euler_nonzero: false, h1_z2_trivial: false };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Trivial cover, consistent with the flags: a nowhere-zero eigenline section exists on the sample.
    SectionExists,
    /// Connected cover, consistent with the flags.
    ConnectedCover,
    /// Trivial cover although the Euler class is non-zero.
    EulerContradiction,
    /// Connected cover although `H₁(M; Z/2)` vanishes.
    CoverContradiction,
    /// Eigenvalue `i` is not simple at some sample point.
    DegeneracyOnSample,
    /// Some neighbor edges could not be aligned.
    Ambiguous,
}

impl Verdict {
    pub fn is_contradiction(self) -> bool {
        matches!(self, Verdict::EulerContradiction | Verdict::CoverContradiction)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Verdict::SectionExists => "cover is trivial: the eigenlines admit a consistent unit section on the sample",
            Verdict::ConnectedCover => "cover is connected: the eigenline bundle is non-orientable along some loop",
            Verdict::EulerContradiction => {
                "cover is trivial but the Euler class is non-zero: genericity must fail between sample points"
            }
            Verdict::CoverContradiction => {
                "cover is connected but H1(M; Z/2) = 0 admits no such cover: genericity must fail between sample points"
            }
            Verdict::DegeneracyOnSample => "the eigenvalue is not simple at some sample point",
            Verdict::Ambiguous => "some neighbor eigenlines are nearly orthogonal: the sample under-resolves the cover",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub i: usize,
    pub flags: ManifoldFlags,
    pub generic_on_sample: bool,
    /// Relative gap of eigenvalue `i`, minimized over points.
    pub min_gap: f64,
    pub argmin_point: usize,
    pub cover_components: Option<usize>,
    pub ambiguous_edges: usize,
    pub verdict: Verdict,
    pub verdict_text: String,
    /// What the cover says once ambiguous edges are dropped, when `verdict` is `Ambiguous`.
    pub verdict_without_ambiguous: Option<Verdict>,
}

impl ObstructionReport {
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self)
    }
}

/// Cover-based obstruction check for eigenvalue `i` of a bundle frame.
pub fn obstruction_report(
    bundle: &BundleFrame,
    i: usize,
    flags: ManifoldFlags,
    tol: &Tolerance,
) -> Result<ObstructionReport, SpectralError> {
    if i == 0 || i > bundle.k() {
        return Err(FrameError::IndexOutOfRange { index: i, k: bundle.k() }.into());
    }
    let gaps: Vec<f64> = bundle
        .frames()
        .par_iter()
        .map(|f| {
            let eig = f.frame_operator().eigen();
            if eig.min_value() > tol.abs_tol { index_gap(&eig.values, i) } else { 0.0 }
        })
        .collect();
    let (argmin_point, min_gap) =
        gaps.iter().copied().enumerate().fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    let generic_on_sample = min_gap > tol.rel_gap;
    let report = |cover_components, ambiguous_edges, verdict: Verdict, unresolved| ObstructionReport {
        i,
        flags,
        generic_on_sample,
        min_gap,
        argmin_point,
        cover_components,
        ambiguous_edges,
        verdict,
        verdict_text: verdict.describe().to_string(),
        verdict_without_ambiguous: unresolved,
    };
    if !generic_on_sample {
        return Ok(report(None, 0, Verdict::DegeneracyOnSample, None));
    }
    let cover = spectral_cover(bundle, i, tol)?;
    let resolved = if cover.is_trivial() {
        if flags.euler_nonzero { Verdict::EulerContradiction } else { Verdict::SectionExists }
    } else if flags.h1_z2_trivial {
        Verdict::CoverContradiction
    } else {
        Verdict::ConnectedCover
    };
    let (verdict, unresolved) =
        if cover.ambiguous_edges.is_empty() { (resolved, None) } else { (Verdict::Ambiguous, Some(resolved)) };
    Ok(report(Some(cover.component_count()), cover.ambiguous_edges.len(), verdict, unresolved))
}
