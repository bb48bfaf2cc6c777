//! Noisy measurement and reconstruction of tangent vector fields.
//!
//! At each point the data is `σᵀ v + e` with `e ~ N(0, variance · I_n)`, and
//! the estimate is `(σ σᵀ)⁻¹ σ (σᵀ v + e)`. The squared error averaged over
//! the sample is the MSE of one (frame, field) pair. For a frame with
//! per-point spectrum `λ`, the expected squared error at that point is
//! `variance · Σ 1/λ_i`, which is smallest for Parseval frames among frames
//! of equal trace.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{self, BundleError, BundleFrame, VectorField};
use crate::frame::{FrameError, RealFrame, Tolerance};
use crate::noise::NoiseParams;
use crate::sampling::{self, ManifoldSample, PointFormat, SampleError};
use crate::seed;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("point {point}: {source}")]
    NotAFrame { point: usize, source: FrameError },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Short machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::DimensionMismatch(_) => "DimensionMismatch",
            HarnessError::NotAFrame { .. } => "NotAFrame",
            HarnessError::Frame(_) => "FrameError",
            HarnessError::Bundle(_) => "BundleError",
            HarnessError::Sample(_) => "SampleError",
            HarnessError::Config(_) => "ConfigError",
            HarnessError::Io(_) => "IoError",
            HarnessError::Json(_) => "JsonError",
        }
    }
}

/// Coefficients `σᵀ v` of `v` against the frame vectors.
pub fn measure(frame: &RealFrame, v: &DVector<f64>) -> Result<DVector<f64>, HarnessError> {
    if v.len() != frame.k() {
        return Err(HarnessError::DimensionMismatch(format!(
            "vector of length {} for a frame with k = {}",
            v.len(),
            frame.k()
        )));
    }
    Ok(frame.matrix().transpose() * v)
}

/// The reconstruction operator `(σ σᵀ)⁻¹ σ` of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstructor {
    operator: DMatrix<f64>,
}

impl Reconstructor {
    pub fn new(frame: &RealFrame, tol: &Tolerance) -> Result<Self, FrameError> {
        let s = frame.frame_operator().0;
        let min_eigenvalue = frame.frame_operator().eigen().min_value();
        if !(min_eigenvalue > tol.abs_tol) {
            return Err(FrameError::NotAFrame { min_eigenvalue });
        }
        let chol = s.cholesky().ok_or(FrameError::NotAFrame { min_eigenvalue })?;
        Ok(Self { operator: chol.solve(frame.matrix()) })
    }

    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator
    }

    pub fn apply(&self, data: &DVector<f64>) -> Result<DVector<f64>, HarnessError> {
        if data.len() != self.operator.ncols() {
            return Err(HarnessError::DimensionMismatch(format!(
                "data of length {} for a frame with n = {}",
                data.len(),
                self.operator.ncols()
            )));
        }
        Ok(&self.operator * data)
    }
}

/// Least-squares reconstruction `(σ σᵀ)⁻¹ σ · data`.
pub fn reconstruct(frame: &RealFrame, data: &DVector<f64>) -> Result<DVector<f64>, HarnessError> {
    Reconstructor::new(frame, &Tolerance::default())?.apply(data)
}

/// Additive noise applied to measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeasurementNoise {
    /// i.i.d. `N(0, variance)` on every coefficient.
    Gaussian { variance: f64 },
    /// Noise vector forced to zero.
    Zero,
}

impl MeasurementNoise {
    fn draw(&self, n: usize, seed: u64) -> DVector<f64> {
        match *self {
            MeasurementNoise::Gaussian { variance } => {
                let sd = variance.sqrt();
                let mut rng = seed::rng_from(seed);
                DVector::from_fn(n, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
            }
            MeasurementNoise::Zero => DVector::zeros(n),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            MeasurementNoise::Gaussian { variance } => variance,
            MeasurementNoise::Zero => 0.0,
        }
    }
}

fn reconstructors(bundle: &BundleFrame) -> Result<Vec<Reconstructor>, HarnessError> {
    let tol = Tolerance::default();
    bundle
        .frames()
        .par_iter()
        .enumerate()
        .map(|(point, f)| Reconstructor::new(f, &tol).map_err(|source| HarnessError::NotAFrame { point, source }))
        .collect()
}

fn check_same_sample(bundle: &BundleFrame, field: &VectorField) -> Result<(), HarnessError> {
    if bundle.len() != field.len() || bundle.k() != field.vectors().first().map_or(0, |v| v.len()) {
        return Err(HarnessError::DimensionMismatch(
            "bundle frame and vector field are not over the same sample".into(),
        ));
    }
    Ok(())
}

fn mse_with(
    bundle: &BundleFrame,
    recon: &[Reconstructor],
    field: &VectorField,
    noise: MeasurementNoise,
    seed: u64,
) -> f64 {
    let total: f64 = (0..bundle.len())
        .map(|p| {
            let v = field.vector(p);
            let mut data = bundle.frame(p).matrix().transpose() * v;
            data += noise.draw(bundle.n(), seed::sub_seed(seed, p as u64));
            (&recon[p].operator * data - v).norm_squared()
        })
        .sum();
    total / bundle.len() as f64
}

/// Mean over sample points of the squared reconstruction error from noisy
/// measurements. Point `p` uses noise seeded by `sub_seed(seed, p)`.
pub fn field_mse(
    bundle: &BundleFrame,
    field: &VectorField,
    noise: MeasurementNoise,
    seed: u64,
) -> Result<f64, HarnessError> {
    check_same_sample(bundle, field)?;
    let recon = reconstructors(bundle)?;
    Ok(mse_with(bundle, &recon, field, noise, seed))
}

/// `variance · Σ_i 1/λ_i` for one frame.
pub fn expected_point_mse(frame: &RealFrame, variance: f64) -> Result<f64, FrameError> {
    let spec = frame.spectrum(&Tolerance::default())?;
    Ok(variance * spec.values.iter().map(|l| 1.0 / l).sum::<f64>())
}

/// Analytic expectation of [`field_mse`]: the per-point law averaged over the sample.
pub fn expected_field_mse(bundle: &BundleFrame, variance: f64) -> Result<f64, HarnessError> {
    let per_point = bundle
        .frames()
        .par_iter()
        .enumerate()
        .map(|(point, f)| expected_point_mse(f, variance).map_err(|source| HarnessError::NotAFrame { point, source }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_point.iter().sum::<f64>() / per_point.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    Fibonacci(usize),
    File(PathBuf),
}

impl SampleSource {
    pub fn build(&self) -> Result<ManifoldSample, SampleError> {
        match self {
            SampleSource::Fibonacci(n) => sampling::fibonacci_sphere(*n, 1.0),
            SampleSource::File(path) => sampling::load_points(path, PointFormat::CsvXyz),
        }
    }
}

fn default_frames() -> usize {
    1000
}
fn default_fields() -> usize {
    1000
}
fn default_variance() -> f64 {
    0.01
}
fn default_source() -> SampleSource {
    SampleSource::Fibonacci(1592)
}

/// Parameters of the reconstruction experiment. Missing JSON fields take
/// the full-scale values: 1000 frames, 1000 fields, variance 0.01,
/// 1592 Fibonacci points, seed 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_frames")]
    pub num_random_frames: usize,
    #[serde(default = "default_fields")]
    pub num_fields: usize,
    /// Per-coordinate variance of the measurement noise.
    #[serde(default = "default_variance")]
    pub noise_variance: f64,
    #[serde(default = "default_source")]
    pub sample_source: SampleSource,
    #[serde(default)]
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_random_frames: default_frames(),
            num_fields: default_fields(),
            noise_variance: default_variance(),
            sample_source: default_source(),
            master_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.num_random_frames == 0 || self.num_fields == 0 {
            return Err(HarnessError::Config("frame and field counts must be at least 1".into()));
        }
        if !(self.noise_variance > 0.0) || !self.noise_variance.is_finite() {
            return Err(HarnessError::Config(format!(
                "noise_variance must be positive, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

const FRAME_STREAM: u64 = 1;
const FIELD_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// Seed of random frame `index` (1-based; 0 is the Parseval frame).
pub fn frame_seed(master: u64, index: usize) -> u64 {
    seed::seed_path(master, &[FRAME_STREAM, index as u64])
}

pub fn field_seed(master: u64, index: usize) -> u64 {
    seed::seed_path(master, &[FIELD_STREAM, index as u64])
}

/// Seed of the noise for one (frame, field) pair; per-point seeds derive from it.
pub fn noise_seed(master: u64, frame: usize, field: usize) -> u64 {
    seed::seed_path(master, &[NOISE_STREAM, frame as u64, field as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub gaussian_sampler: String,
    pub noise_convention: String,
    pub noise_variance: f64,
    pub noise_params: NoiseParams,
    pub sample_label: Option<String>,
    pub num_points: usize,
    pub master_seed: u64,
    /// `variance · k`, the expected MSE of any Parseval frame.
    pub expected_parseval_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFrameMses {
    /// 1-based frame index within the run.
    pub index: usize,
    pub seed: u64,
    pub attempt: usize,
    /// One MSE per vector field.
    pub mses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostic {
    pub index: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl MseSummary {
    pub fn of(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Self { min, max, mean }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub header: ReportHeader,
    pub parseval_mses: Vec<f64>,
    pub random_frames: Vec<RandomFrameMses>,
    pub diagnostics: Vec<FrameDiagnostic>,
}

impl MseReport {
    pub fn parseval_summary(&self) -> MseSummary {
        MseSummary::of(&self.parseval_mses)
    }

    pub fn random_summaries(&self) -> Vec<MseSummary> {
        self.random_frames.iter().map(|f| MseSummary::of(&f.mses)).collect()
    }

    /// The random frame with the lowest mean MSE.
    pub fn best_random(&self) -> Option<&RandomFrameMses> {
        self.random_frames
            .iter()
            .zip(self.random_summaries())
            .min_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
            .map(|(f, _)| f)
    }

    /// Sorted copy of an MSE list, the support of its empirical CDF.
    pub fn cdf_table(values: &[f64]) -> Vec<f64> {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Frame × field matrix of random-frame MSEs.
    pub fn random_frame_mses(&self) -> Vec<&[f64]> {
        self.random_frames.iter().map(|f| f.mses.as_slice()).collect()
    }
}

/// Run the experiment with Gaussian measurement noise of the configured variance.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MseReport, HarnessError> {
    run_experiment_with_noise(config, MeasurementNoise::Gaussian { variance: config.noise_variance })
}

/// Run the experiment with an explicit noise model (e.g. [`MeasurementNoise::Zero`]).
///
/// Frame 0 is the projection Parseval frame and frames 1..=F are random.
/// Random frames that cannot be generated are reported in `diagnostics` and
/// skipped.
pub fn run_experiment_with_noise(
    config: &ExperimentConfig,
    noise: MeasurementNoise,
) -> Result<MseReport, HarnessError> {
    config.validate()?;
    let sample = Arc::new(config.sample_source.build()?);
    let master = config.master_seed;

    let parseval = bundle::projection_frame(Arc::clone(&sample));
    let generated: Vec<(usize, u64, Result<BundleFrame, BundleError>)> = (1..=config.num_random_frames)
        .into_par_iter()
        .map(|i| {
            let s = frame_seed(master, i);
            (i, s, bundle::random_bundle_frame(Arc::clone(&sample), 3, s))
        })
        .collect();
    let fields = (0..config.num_fields)
        .into_par_iter()
        .map(|j| bundle::random_vector_field(Arc::clone(&sample), field_seed(master, j)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut diagnostics = Vec::new();
    let mut frames: Vec<(usize, u64, BundleFrame)> = vec![(0, 0, parseval)];
    for (i, s, result) in generated {
        match result {
            Ok(b) => frames.push((i, s, b)),
            Err(e) => diagnostics.push(FrameDiagnostic { index: i, seed: s, message: e.to_string() }),
        }
    }
    let recon: Vec<Vec<Reconstructor>> = frames
        .iter()
        .map(|(_, _, b)| reconstructors(b))
        .collect::<Result<_, _>>()?;

    let pairs: Vec<(usize, usize)> =
        (0..frames.len()).flat_map(|f| (0..fields.len()).map(move |v| (f, v))).collect();
    let mses: Vec<f64> = pairs
        .par_iter()
        .map(|&(f, v)| {
            let (index, _, ref b) = frames[f];
            mse_with(b, &recon[f], &fields[v], noise, noise_seed(master, index, v))
        })
        .collect();

    let per_frame: Vec<Vec<f64>> = mses.chunks(fields.len()).map(<[f64]>::to_vec).collect();
    let parseval_mses = per_frame[0].clone();
    let random_frames = frames[1..]
        .iter()
        .zip(&per_frame[1..])
        .map(|((index, s, b), m)| RandomFrameMses {
            index: *index,
            seed: *s,
            attempt: b.provenance.as_ref().map_or(0, |p| p.attempt),
            mses: m.clone(),
        })
        .collect();

    let header = ReportHeader {
        gaussian_sampler: seed::GAUSSIAN_SAMPLER.to_string(),
        noise_convention: "per-coordinate variance: noise covariance is noise_variance * I_n; \
            MSE is the squared error norm summed over all k coordinates, so a Parseval frame \
            expects noise_variance * k (divide by k for a per-coordinate figure)"
            .into(),
        noise_variance: noise.variance(),
        noise_params: NoiseParams::default(),
        sample_label: sample.label.clone(),
        num_points: sample.len(),
        master_seed: master,
        expected_parseval_mse: noise.variance() * sample.intrinsic_dim() as f64,
    };
    Ok(MseReport { header, parseval_mses, random_frames, diagnostics })
}

pub const HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    /// 0 for the Parseval frame, 1.. for random frames.
    pub index: usize,
    #[serde(flatten)]
    pub stats: MseSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub header: ReportHeader,
    pub parseval: FrameSummary,
    pub random: Vec<FrameSummary>,
    pub best_random_index: Option<usize>,
    pub best_random_seed: Option<u64>,
    /// Minimum random-frame MSE divided by the maximum Parseval MSE.
    pub separation_ratio: Option<f64>,
    pub diagnostics: Vec<FrameDiagnostic>,
}

impl MseReport {
    pub fn summary(&self) -> ReportSummary {
        let random: Vec<FrameSummary> = self
            .random_frames
            .iter()
            .zip(self.random_summaries())
            .map(|(f, stats)| FrameSummary { index: f.index, stats })
            .collect();
        let parseval = FrameSummary { index: 0, stats: self.parseval_summary() };
        let best = self.best_random();
        let min_random = random.iter().map(|r| r.stats.min).fold(f64::INFINITY, f64::min);
        ReportSummary {
            header: self.header.clone(),
            parseval,
            random,
            best_random_index: best.map(|b| b.index),
            best_random_seed: best.map(|b| b.seed),
            separation_ratio: best.map(|_| min_random / parseval.stats.max),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Equal-width bins over `[lo, hi]`; the last bin is closed.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    for &v in values {
        let b = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
}

fn write_cdf(path: &std::path::Path, values: &[f64]) -> std::io::Result<()> {
    let sorted = MseReport::cdf_table(values);
    let n = sorted.len() as f64;
    let mut out = String::from("mse,cumulative\n");
    for (i, v) in sorted.iter().enumerate() {
        out.push_str(&format!("{v:e},{}\n", (i + 1) as f64 / n));
    }
    std::fs::write(path, out)
}

/// Files written by [`emit_report`].
pub const REPORT_FILES: [&str; 6] = [
    "mse_parseval.csv",
    "mse_random.csv",
    "cdf_parseval.csv",
    "cdf_best_random.csv",
    "histogram.csv",
    "summary.json",
];

/// Write the MSE tables, empirical CDFs, a histogram of the Parseval and best
/// random distributions over a shared range, and a JSON summary.
pub fn emit_report(report: &MseReport, out_dir: &std::path::Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let paths: Vec<PathBuf> = REPORT_FILES.iter().map(|f| out_dir.join(f)).collect();

    let mut out = String::from("field,mse\n");
    for (j, m) in report.parseval_mses.iter().enumerate() {
        out.push_str(&format!("{j},{m:e}\n"));
    }
    std::fs::write(&paths[0], out)?;

    let mut out = String::from("frame,field,mse\n");
    for f in &report.random_frames {
        for (j, m) in f.mses.iter().enumerate() {
            out.push_str(&format!("{},{j},{m:e}\n", f.index));
        }
    }
    std::fs::write(&paths[1], out)?;

    write_cdf(&paths[2], &report.parseval_mses)?;
    let best: &[f64] = report.best_random().map_or(&[], |b| &b.mses);
    write_cdf(&paths[3], best)?;

    let all = report.parseval_mses.iter().chain(best);
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    let hp = histogram(&report.parseval_mses, lo, hi, HISTOGRAM_BINS);
    let hb = histogram(best, lo, hi, HISTOGRAM_BINS);
    let width = if hi > lo { (hi - lo) / HISTOGRAM_BINS as f64 } else { 1.0 };
    let mut out = String::from("bin_lo,bin_hi,parseval_count,best_random_count\n");
    for b in 0..HISTOGRAM_BINS {
        let a = lo + b as f64 * width;
        let z = if b + 1 == HISTOGRAM_BINS { hi.max(a) } else { a + width };
        out.push_str(&format!("{a:e},{z:e},{},{}\n", hp[b], hb[b]));
    }
    std::fs::write(&paths[4], out)?;

    std::fs::write(&paths[5], serde_json::to_string_pretty(&report.summary())?)?;
    Ok(paths)
}
