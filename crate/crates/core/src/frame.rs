//! Frames on a single fiber.
//!
//! A [`Frame`] is stored as its k×n synthesis matrix: column `j` holds the
//! coordinates of the `j`th frame vector. The analysis operator is the
//! adjoint `A^H`, and the frame operator is `A A^H`.
//!
//! The Parseval retraction is the polar decomposition `A = P B` with `P` the
//! principal square root of the frame operator. Spectra come from the
//! self-adjoint eigendecomposition of `A A^H`; the polar factors are read off
//! the thin SVD `A = U Σ V^H` as `P = U Σ U^H` and `B = U V^H`, which keeps
//! `B B^H = I` at working precision even for badly conditioned `A`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use rand::RngCore;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("not a frame: smallest frame-operator eigenvalue {min_eigenvalue:e} is at or below tolerance")]
    NotAFrame { min_eigenvalue: f64 },
    #[error("not a Parseval frame: max deviation of frame operator from identity is {deviation:e}")]
    NotParseval { deviation: f64 },
    #[error("invalid dimensions: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("spectral index {index} out of range 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("frame generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
}

/// Numerical thresholds standing in for exact equalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Absolute threshold used for eigenvalue positivity and identity checks.
    pub abs_tol: f64,
    /// Relative spectral gap below which adjacent eigenvalues are treated as equal.
    pub rel_gap: f64,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_gap: f64) -> Result<Self, FrameError> {
        if !(abs_tol >= 0.0 && rel_gap >= 0.0) {
            return Err(FrameError::Domain(format!(
                "tolerances must be non-negative (abs_tol={abs_tol}, rel_gap={rel_gap})"
            )));
        }
        Ok(Self { abs_tol, rel_gap })
    }

    pub fn with_rel_gap(self, rel_gap: f64) -> Self {
        Self { rel_gap, ..self }
    }

    pub fn with_abs_tol(self, abs_tol: f64) -> Self {
        Self { abs_tol, ..self }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_gap: 1e-8 }
    }
}

/// Largest absolute entry of a matrix.
pub fn max_abs<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.modulus()))
}

/// Eigenvalues of a k×k self-adjoint matrix in descending order, with the
/// matching unit eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SelfAdjointEigen<T: Scalar> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
}

impl<T: Scalar> SelfAdjointEigen<T> {
    pub fn new(m: &DMatrix<T>) -> Self {
        let sym = (m + m.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        Self { values, vectors }
    }

    /// `V diag(f(λ)) V^H`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> DMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (c, &lambda) in self.values.iter().enumerate() {
            let s = T::from_real(f(lambda));
            scaled.column_mut(c).iter_mut().for_each(|x| *x *= s);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }
}

/// The self-adjoint operator `A A^H` of a frame candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOperator<T: Scalar>(pub DMatrix<T>);

impl<T: Scalar> FrameOperator<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn eigen(&self) -> SelfAdjointEigen<T> {
        SelfAdjointEigen::new(&self.0)
    }

    /// `max |S - c I|`.
    pub fn deviation_from_scalar(&self, c: f64) -> f64 {
        let k = self.0.nrows();
        max_abs(&(&self.0 - DMatrix::<T>::identity(k, k).scale(c)))
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|x| x.real()).sum()
    }
}

/// Descending eigenvalues `λ_1 ≥ … ≥ λ_k` of a frame operator.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
}

impl Spectrum {
    /// Wraps `values`, which must already be sorted in descending order.
    pub fn new(values: Vec<f64>) -> Result<Self, FrameError> {
        if values.is_empty() {
            return Err(FrameError::Dimension("empty spectrum".into()));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(FrameError::Domain("spectrum must be descending".into()));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Gap between entries `j` and `j+1` (0-based), normalized by the top entry.
    pub fn relative_gap(&self, j: usize) -> f64 {
        let top = self.values[0];
        let gap = self.values[j] - self.values[j + 1];
        if top > 0.0 {
            gap / top
        } else {
            gap
        }
    }

    /// Smallest normalized gap between consecutive entries; 1 when k = 1.
    pub fn min_relative_gap(&self) -> f64 {
        (0..self.len().saturating_sub(1))
            .map(|j| self.relative_gap(j))
            .fold(1.0, f64::min)
    }

    /// Multiplicity of each entry, where consecutive entries whose relative
    /// gap is at most `rel_gap` are grouped together. `rel_gap = 0` is exact
    /// equality.
    pub fn multiplicities(&self, rel_gap: f64) -> Vec<usize> {
        let k = self.len();
        let mut group_of = vec![0usize; k];
        let mut sizes = vec![1usize];
        for j in 1..k {
            if self.relative_gap(j - 1) <= rel_gap {
                *sizes.last_mut().unwrap() += 1;
            } else {
                sizes.push(1);
            }
            group_of[j] = sizes.len() - 1;
        }
        group_of.into_iter().map(|g| sizes[g]).collect()
    }

    pub fn scaled(&self, c: f64) -> Spectrum {
        Spectrum { values: self.values.iter().map(|x| x * c).collect() }
    }
}

struct PolarSvd<T: Scalar> {
    u: DMatrix<T>,
    sigma: Vec<f64>,
    v_t: DMatrix<T>,
}

impl<T: Scalar> PolarSvd<T> {
    /// `U V^H`, which equals `P^{-1} A` and has orthonormal rows to working
    /// precision regardless of the conditioning of `A`.
    fn parseval_factor(&self) -> DMatrix<T> {
        &self.u * &self.v_t
    }

    fn u_diag_uh(&self, f: impl Fn(f64) -> f64) -> DMatrix<T> {
        let mut scaled = self.u.clone();
        for (c, &s) in self.sigma.iter().enumerate() {
            let w = T::from_real(f(s));
            scaled.column_mut(c).iter_mut().for_each(|x| *x *= w);
        }
        scaled * self.u.adjoint()
    }
}

/// A k×n synthesis matrix with k ≥ 1 and n ≥ k.
///
/// A value may fail the rank condition; [`Frame::is_frame`] decides whether
/// it actually spans the fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T: Scalar> {
    entries: DMatrix<T>,
}

pub type RealFrame = Frame<f64>;
pub type ComplexFrame = Frame<num_complex::Complex64>;

impl<T: Scalar> Frame<T> {
    pub fn new(entries: DMatrix<T>) -> Result<Self, FrameError> {
        let (k, n) = entries.shape();
        if k == 0 {
            return Err(FrameError::Dimension("fiber dimension k must be at least 1".into()));
        }
        if n < k {
            return Err(FrameError::Dimension(format!("frame size n={n} is smaller than k={k}")));
        }
        Ok(Self { entries })
    }

    /// Build from row-major data.
    pub fn from_rows(k: usize, n: usize, data: &[T]) -> Result<Self, FrameError> {
        if data.len() != k * n {
            return Err(FrameError::Dimension(format!(
                "expected {} entries for a {k}x{n} frame, got {}",
                k * n,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(k, n, data))
    }

    /// The canonical frame `[I_k | 0]`.
    pub fn canonical(k: usize, n: usize) -> Result<Self, FrameError> {
        Self::new(DMatrix::identity(k, n))
    }

    /// i.i.d. standard normal entries, redrawn until the result is a frame.
    pub fn random(k: usize, n: usize, seed: u64) -> Result<Self, FrameError> {
        const MAX_ATTEMPTS: usize = 64;
        if k == 0 || n < k {
            return Err(FrameError::Dimension(format!("need n >= k >= 1, got k={k}, n={n}")));
        }
        let mut rng = seed::rng_from(seed);
        let tol = Tolerance::default();
        for _ in 0..MAX_ATTEMPTS {
            let entries = DMatrix::from_fn(k, n, |_, _| T::sample_standard(&mut rng));
            let frame = Self { entries };
            if frame.is_frame(&tol) {
                return Ok(frame);
            }
            // decorrelate the retry from the rejected draw
            let _ = rng.next_u64();
        }
        Err(FrameError::GenerationFailed { attempts: MAX_ATTEMPTS })
    }

    pub fn k(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.entries
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { entries: self.entries.scale(c) }
    }

    /// `A A^H`.
    pub fn frame_operator(&self) -> FrameOperator<T> {
        FrameOperator(&self.entries * self.entries.adjoint())
    }

    /// Analysis operator applied to `v`: the coefficients `A^H v`.
    pub fn analyze(&self, v: &DVector<T>) -> Result<DVector<T>, FrameError> {
        if v.len() != self.k() {
            return Err(FrameError::Dimension(format!(
                "vector of length {} does not match fiber dimension {}",
                v.len(),
                self.k()
            )));
        }
        Ok(self.entries.adjoint() * v)
    }

    pub fn is_frame(&self, tol: &Tolerance) -> bool {
        self.frame_operator().eigen().min_value() > tol.abs_tol
    }

    pub fn is_parseval(&self, tol: &Tolerance) -> bool {
        self.frame_operator().deviation_from_scalar(1.0) <= tol.abs_tol
    }

    /// The tight constant `c = tr(A A^H)/k`, if `A A^H = c I` within tolerance.
    pub fn tight_constant(&self, tol: &Tolerance) -> Option<f64> {
        let op = self.frame_operator();
        let c = op.trace() / self.k() as f64;
        (c > tol.abs_tol && op.deviation_from_scalar(c) <= tol.abs_tol).then_some(c)
    }

    fn checked_eigen(&self, tol: &Tolerance) -> Result<SelfAdjointEigen<T>, FrameError> {
        let eig = self.frame_operator().eigen();
        let min_eigenvalue = eig.min_value();
        if min_eigenvalue.is_nan() || min_eigenvalue <= tol.abs_tol {
            return Err(FrameError::NotAFrame { min_eigenvalue });
        }
        Ok(eig)
    }

    /// Thin SVD `A = U Σ V^H`, checked for rank: `σ_min² = λ_min(A A^H)` must
    /// exceed `abs_tol`.
    fn checked_svd(&self, tol: &Tolerance) -> Result<PolarSvd<T>, FrameError> {
        let svd = SVD::new(self.entries.clone(), true, true);
        let min_eigenvalue = svd.singular_values.iter().fold(f64::INFINITY, |m, &s| m.min(s * s));
        if min_eigenvalue.is_nan() || min_eigenvalue <= tol.abs_tol {
            return Err(FrameError::NotAFrame { min_eigenvalue });
        }
        Ok(PolarSvd {
            u: svd.u.expect("requested U"),
            sigma: svd.singular_values.iter().copied().collect(),
            v_t: svd.v_t.expect("requested V^H"),
        })
    }

    /// Principal square root `P` of the frame operator together with the
    /// Parseval factor `B = P^{-1} A`, so that `A = P B`.
    pub fn polar_parts(&self, tol: &Tolerance) -> Result<(DMatrix<T>, Frame<T>), FrameError> {
        let svd = self.checked_svd(tol)?;
        Ok((svd.u_diag_uh(|s| s), Frame { entries: svd.parseval_factor() }))
    }

    /// The Parseval frame `P^{-1} A`.
    pub fn parseval_retract(&self, tol: &Tolerance) -> Result<Frame<T>, FrameError> {
        Ok(Frame { entries: self.checked_svd(tol)?.parseval_factor() })
    }

    /// Point `t` of the straight-line homotopy `((1-t) P + t I) B` from `A`
    /// (t = 0) to its Parseval retraction (t = 1).
    pub fn retract_path(&self, t: f64, tol: &Tolerance) -> Result<Frame<T>, FrameError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(FrameError::Domain(format!("path parameter t={t} outside [0, 1]")));
        }
        let svd = self.checked_svd(tol)?;
        let mut left = svd.u.clone();
        for (c, &s) in svd.sigma.iter().enumerate() {
            let w = T::from_real((1.0 - t) * s + t);
            left.column_mut(c).iter_mut().for_each(|x| *x *= w);
        }
        Ok(Frame { entries: left * &svd.v_t })
    }

    pub fn spectrum(&self, tol: &Tolerance) -> Result<Spectrum, FrameError> {
        let eig = self.checked_eigen(tol)?;
        Ok(Spectrum { values: eig.values })
    }

    pub fn multiplicities(&self, tol: &Tolerance) -> Result<Vec<usize>, FrameError> {
        Ok(self.spectrum(tol)?.multiplicities(tol.rel_gap))
    }

    /// All frame-operator eigenvalues simple.
    pub fn is_generic(&self, tol: &Tolerance) -> Result<bool, FrameError> {
        Ok(self.multiplicities(tol)?.iter().all(|&m| m == 1))
    }

    /// The `i`th eigenvalue is simple. `i` counts from 1 (`λ_1` is the largest).
    pub fn is_i_generic(&self, i: usize, tol: &Tolerance) -> Result<bool, FrameError> {
        if i == 0 || i > self.k() {
            return Err(FrameError::IndexOutOfRange { index: i, k: self.k() });
        }
        Ok(self.multiplicities(tol)?[i - 1] == 1)
    }

    /// Complete a Parseval frame to an n×n orthogonal (unitary) matrix whose
    /// first k rows are the frame itself.
    ///
    /// Remaining rows come from orthogonalizing standard basis vectors
    /// against the rows chosen so far, always taking the candidate with the
    /// largest residual (lowest index on ties).
    pub fn naimark_dilate(&self, tol: &Tolerance) -> Result<DMatrix<T>, FrameError> {
        let deviation = self.frame_operator().deviation_from_scalar(1.0);
        if !(deviation <= tol.abs_tol) {
            return Err(FrameError::NotParseval { deviation });
        }
        let (k, n) = self.entries.shape();
        // Work with rows as column vectors of C^n: row r of U is rows[r]^T.
        let mut rows: Vec<DVector<T>> =
            (0..k).map(|r| self.entries.row(r).transpose()).collect();
        let mut used = vec![false; n];
        while rows.len() < n {
            let mut best: Option<(usize, DVector<T>, f64)> = None;
            for j in (0..n).filter(|&j| !used[j]) {
                let residual = orthogonalize(&DVector::from_fn(n, |r, _| {
                    if r == j { T::one() } else { T::zero() }
                }), &rows);
                let norm = residual.norm();
                if best.as_ref().is_none_or(|(_, _, b)| norm > *b) {
                    best = Some((j, residual, norm));
                }
            }
            let (j, residual, norm) = best.expect("fewer rows than n leaves a candidate");
            used[j] = true;
            let refined = orthogonalize(&residual.unscale(norm), &rows);
            let refined_norm = refined.norm();
            rows.push(refined.unscale(refined_norm));
        }
        let mut u = DMatrix::<T>::zeros(n, n);
        for (r, row) in rows.iter().enumerate() {
            u.row_mut(r).copy_from(&row.transpose());
        }
        // First k rows are copied verbatim.
        u.rows_mut(0, k).copy_from(&self.entries);
        Ok(u)
    }
}

/// Remove from `v` its components along the orthonormal "rows" (rows are
/// treated as vectors whose Hermitian inner product with x is Σ x_j conj(r_j)).
fn orthogonalize<T: Scalar>(v: &DVector<T>, rows: &[DVector<T>]) -> DVector<T> {
    let mut out = v.clone();
    for r in rows {
        // <out, r> = Σ out_j conj(r_j)
        let coeff = r.dotc(&out);
        out -= r * coeff;
    }
    out
}
