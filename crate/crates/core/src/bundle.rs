//! Frames as sections over a [`ManifoldSample`].
//!
//! A [`BundleFrame`] attaches one k×n frame to every sample point. For
//! tangent bundles the frame is written in the intrinsic coordinates given by
//! the sample's tangent basis at that point; synthetic bundles (see
//! [`crate::spectral`]) may use any fixed trivialization of a rank-k bundle.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{FrameError, RealFrame, Spectrum, Tolerance};
use crate::noise::{NoiseField, NoiseParams};
use crate::sampling::{matrix_rows, ManifoldSample};
use crate::seed;

/// Whole-bundle redraws allowed before [`random_bundle_frame`] gives up.
pub const MAX_BUNDLE_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BundleError {
    #[error("frame at point {point} is not a frame: {source}")]
    NotAFrame { point: usize, source: FrameError },
    #[error("expected {expected} per-point values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("frame at point {point} has shape {got:?}, expected {expected:?}")]
    Shape { point: usize, got: (usize, usize), expected: (usize, usize) },
    #[error("sample is not sphere-type (need k = 2, m = 3; got k = {k}, m = {m})")]
    NotSphereType { k: usize, m: usize },
    #[error("bundle frame generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

/// Where the noise behind a random bundle frame came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProvenance {
    pub seed: u64,
    pub attempt: usize,
    pub field_seeds: Vec<u64>,
    pub params: NoiseParams,
}

/// One frame per sample point, all of the same shape, each spanning its fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleFrame {
    sample: Arc<ManifoldSample>,
    frames: Vec<RealFrame>,
    k: usize,
    n: usize,
    pub provenance: Option<NoiseProvenance>,
}

#[derive(Serialize)]
struct BundleFrameDoc<'a> {
    label: Option<&'a str>,
    k: usize,
    n: usize,
    noise: Option<&'a NoiseProvenance>,
    frames: Vec<Vec<Vec<f64>>>,
}

impl BundleFrame {
    /// Checks that every per-point matrix has the same shape and is a frame
    /// at the default tolerance.
    pub fn new(sample: Arc<ManifoldSample>, frames: Vec<RealFrame>) -> Result<Self, BundleError> {
        if frames.len() != sample.len() || frames.is_empty() {
            return Err(BundleError::Length { expected: sample.len(), got: frames.len() });
        }
        let (k, n) = (frames[0].k(), frames[0].n());
        let tol = Tolerance::default();
        for (point, f) in frames.iter().enumerate() {
            if (f.k(), f.n()) != (k, n) {
                return Err(BundleError::Shape { point, got: (f.k(), f.n()), expected: (k, n) });
            }
        }
        if let Some(point) = frames.par_iter().position_first(|f| !f.is_frame(&tol)) {
            let min_eigenvalue = frames[point].frame_operator().eigen().min_value();
            return Err(BundleError::NotAFrame {
                point,
                source: FrameError::NotAFrame { min_eigenvalue },
            });
        }
        Ok(Self { sample, frames, k, n, provenance: None })
    }

    pub fn sample(&self) -> &Arc<ManifoldSample> {
        &self.sample
    }

    pub fn frames(&self) -> &[RealFrame] {
        &self.frames
    }

    pub fn frame(&self, point: usize) -> &RealFrame {
        &self.frames[point]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// The frame at `point` pushed back to ambient coordinates, `T_pᵀ σ(p)`.
    /// Only meaningful when the bundle is the sample's tangent bundle.
    pub fn ambient_frame(&self, point: usize) -> DMatrix<f64> {
        self.sample.tangent_basis(point).transpose() * self.frames[point].matrix()
    }

    pub fn spectra(&self, tol: &Tolerance) -> Vec<Result<Spectrum, FrameError>> {
        self.frames.par_iter().map(|f| f.spectrum(tol)).collect()
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let doc = BundleFrameDoc {
            label: self.sample.label.as_deref(),
            k: self.k,
            n: self.n,
            noise: self.provenance.as_ref(),
            frames: self.frames.iter().map(|f| matrix_rows(f.matrix())).collect(),
        };
        serde_json::to_string(&doc)
    }
}

/// A tangent vector at every sample point, in intrinsic coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    sample: Arc<ManifoldSample>,
    vectors: Vec<DVector<f64>>,
    pub provenance: Option<NoiseProvenance>,
}

#[derive(Serialize)]
struct VectorFieldDoc<'a> {
    label: Option<&'a str>,
    noise: Option<&'a NoiseProvenance>,
    vectors: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(sample: Arc<ManifoldSample>, vectors: Vec<DVector<f64>>) -> Result<Self, BundleError> {
        if vectors.len() != sample.len() {
            return Err(BundleError::Length { expected: sample.len(), got: vectors.len() });
        }
        Ok(Self { sample, vectors, provenance: None })
    }

    pub fn sample(&self) -> &Arc<ManifoldSample> {
        &self.sample
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn vector(&self, point: usize) -> &DVector<f64> {
        &self.vectors[point]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let doc = VectorFieldDoc {
            label: self.sample.label.as_deref(),
            noise: self.provenance.as_ref(),
            vectors: self.vectors.iter().map(|v| v.iter().copied().collect()).collect(),
        };
        serde_json::to_string(&doc)
    }
}

fn require_sphere_type(sample: &ManifoldSample) -> Result<(), BundleError> {
    let (k, m) = (sample.intrinsic_dim(), sample.ambient_dim());
    if (k, m) != (2, 3) {
        return Err(BundleError::NotSphereType { k, m });
    }
    Ok(())
}

fn ambient(sample: &ManifoldSample, i: usize) -> Vector3<f64> {
    let p = sample.point(i);
    Vector3::new(p[0], p[1], p[2])
}

/// Orthogonal projections of the ambient standard basis onto each tangent
/// space. Column `i` at point `p` is `T_p e_i`, so the frame is `T_p` itself;
/// it is Parseval because `T_p` has orthonormal rows.
pub fn projection_frame(sample: Arc<ManifoldSample>) -> BundleFrame {
    let frames = (0..sample.len())
        .map(|i| RealFrame::new(sample.tangent_basis(i).clone()).expect("k <= m"))
        .collect();
    BundleFrame::new(sample, frames).expect("orthonormal tangent bases give frames")
}

/// Project an ambient field `R³ → R³` onto the tangent spaces of a sphere-type sample.
pub fn project_ambient_field(
    sample: Arc<ManifoldSample>,
    field: impl Fn(&Vector3<f64>) -> Vector3<f64> + Sync,
) -> Result<VectorField, BundleError> {
    require_sphere_type(&sample)?;
    let vectors = (0..sample.len())
        .into_par_iter()
        .map(|i| {
            let f = field(&ambient(&sample, i));
            sample.tangent_basis(i) * DVector::from_column_slice(f.as_slice())
        })
        .collect();
    VectorField::new(sample, vectors)
}

/// Smooth random tangent field: a [`NoiseField`] projected to each tangent space.
pub fn random_vector_field(sample: Arc<ManifoldSample>, seed: u64) -> Result<VectorField, BundleError> {
    let noise = NoiseField::new(seed);
    let mut field = project_ambient_field(sample, |x| noise.eval(x))?;
    field.provenance = Some(NoiseProvenance {
        seed,
        attempt: 0,
        field_seeds: vec![seed],
        params: noise.params(),
    });
    Ok(field)
}

/// Smooth random frame of size `n`: `n` independent noise fields, each
/// normalized to unit length at every point and then projected to the
/// tangent space.
///
/// If the result is rank-deficient anywhere, the whole bundle is redrawn from
/// the next attempt's sub-seeds.
pub fn random_bundle_frame(
    sample: Arc<ManifoldSample>,
    n: usize,
    seed: u64,
) -> Result<BundleFrame, BundleError> {
    require_sphere_type(&sample)?;
    if n < sample.intrinsic_dim() {
        return Err(BundleError::Domain(format!("frame size n={n} is below the fiber dimension 2")));
    }
    for attempt in 0..MAX_BUNDLE_ATTEMPTS {
        let field_seeds: Vec<u64> =
            (0..n as u64).map(|j| seed::seed_path(seed, &[attempt as u64, j])).collect();
        let fields: Vec<NoiseField> = field_seeds.iter().map(|&s| NoiseField::new(s)).collect();
        let frames: Option<Vec<RealFrame>> = (0..sample.len())
            .into_par_iter()
            .map(|i| {
                let x = ambient(&sample, i);
                let mut cols = DMatrix::<f64>::zeros(3, n);
                for (j, f) in fields.iter().enumerate() {
                    let v = f.eval(&x);
                    let norm = v.norm();
                    if !(norm > f64::MIN_POSITIVE) {
                        return None;
                    }
                    cols.column_mut(j).copy_from(&(v / norm));
                }
                RealFrame::new(sample.tangent_basis(i) * cols).ok()
            })
            .collect();
        let Some(frames) = frames else { continue };
        if let Ok(mut bundle) = BundleFrame::new(Arc::clone(&sample), frames) {
            bundle.provenance = Some(NoiseProvenance {
                seed,
                attempt,
                field_seeds,
                params: NoiseParams::default(),
            });
            return Ok(bundle);
        }
    }
    Err(BundleError::GenerationFailed { attempts: MAX_BUNDLE_ATTEMPTS })
}

/// Replace every per-point frame by its Parseval retraction.
pub fn bundle_parsevalize(bundle: &BundleFrame, tol: &Tolerance) -> Result<BundleFrame, BundleError> {
    let frames = bundle
        .frames
        .par_iter()
        .enumerate()
        .map(|(point, f)| f.parseval_retract(tol).map_err(|source| BundleError::NotAFrame { point, source }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BundleFrame { frames, provenance: bundle.provenance.clone(), ..bundle.clone() })
}

/// Sample-level genericity summary of a bundle frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericityReport {
    /// Minimum over points of `min_i (λ_i − λ_{i+1}) / λ_1`.
    pub min_gap: f64,
    pub argmin_point: usize,
    /// Entry `i` (0-based) is true iff `λ_{i+1}` is simple at every point.
    pub per_index_generic: Vec<bool>,
}

impl GenericityReport {
    /// Whether spectral index `i` (counted from 1) is generic on the sample.
    pub fn is_i_generic(&self, i: usize) -> bool {
        i >= 1 && self.per_index_generic.get(i - 1).copied().unwrap_or(false)
    }

    pub fn is_generic(&self) -> bool {
        self.per_index_generic.iter().all(|&g| g)
    }
}

pub fn genericity_scan(bundle: &BundleFrame, tol: &Tolerance) -> GenericityReport {
    let k = bundle.k();
    let per_point: Vec<(f64, Vec<usize>)> = bundle
        .spectra(tol)
        .into_iter()
        .map(|s| match s {
            Ok(s) => (s.min_relative_gap().clamp(0.0, 1.0), s.multiplicities(tol.rel_gap)),
            Err(_) => (0.0, vec![k; k]),
        })
        .collect();
    let (argmin_point, min_gap) = per_point
        .iter()
        .enumerate()
        .map(|(i, (g, _))| (i, *g))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let per_index_generic =
        (0..k).map(|i| per_point.iter().all(|(_, mult)| mult[i] == 1)).collect();
    GenericityReport { min_gap, argmin_point, per_index_generic }
}
