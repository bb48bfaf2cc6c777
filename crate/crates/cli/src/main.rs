use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use parframe::bundle::{self, BundleError};
use parframe::invariants::{self, InvariantError, LensSpace, ManifoldDescriptor};
use parframe::matrix_text::{self, AnyFrame, MatrixTextError};
use parframe::reconstruction::{self, ExperimentConfig, HarnessError, SampleSource};
use parframe::sampling::{self, SampleError};
use parframe::spectral::{self, ManifoldFlags, SpectralError};
use parframe::{Field, Frame, FrameError, Scalar, Spectrum, Tolerance};
use serde_json::json;

#[derive(Parser)]
#[command(name = "parframe", version, about = "Parseval frames, bundle frames and their obstructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct TolArgs {
    /// Absolute tolerance for frame and Parseval checks
    #[arg(long, default_value_t = 1e-10)]
    abs_tol: f64,
    /// Relative gap below which eigenvalues count as equal
    #[arg(long, default_value_t = 1e-8)]
    rel_gap: f64,
}

impl TolArgs {
    fn tolerance(self) -> Result<Tolerance, CliError> {
        Ok(Tolerance::new(self.abs_tol, self.rel_gap)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Replace a frame by its Parseval retraction, or a point on the retraction path
    Parsevalize {
        /// Input matrix file
        #[arg(long = "in")]
        input: PathBuf,
        /// Output matrix file
        #[arg(long)]
        out: PathBuf,
        /// Path parameter in [0, 1]; 1 is the full retraction
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Print the frame-operator spectrum, multiplicities and genericity
    Spectrum {
        /// Input matrix file
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Complete a Parseval frame to an orthogonal (unitary) matrix
    Dilate {
        /// Input matrix file holding a Parseval frame
        #[arg(long = "in")]
        input: PathBuf,
        /// Output matrix file
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Run the noisy reconstruction experiment and write MSE tables
    Experiment {
        /// JSON experiment config; flags below override its fields
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for CSV tables and summary.json
        #[arg(long)]
        out: PathBuf,
        /// Number of random bundle frames
        #[arg(long)]
        frames: Option<usize>,
        /// Number of random vector fields
        #[arg(long)]
        fields: Option<usize>,
        /// Per-coordinate noise variance
        #[arg(long)]
        variance: Option<f64>,
        /// Number of Fibonacci sphere points
        #[arg(long)]
        points: Option<usize>,
        /// Master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (results do not depend on this)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Build a spectral cover and report the obstruction verdict
    Cover {
        /// Circle fixtures are checked against circle topology, sphere-random against the sphere
        #[arg(long, value_enum)]
        fixture: Fixture,
        /// Number of sample points
        #[arg(long)]
        n: Option<usize>,
        /// 1-based spectral index
        #[arg(long, default_value_t = 1)]
        index: usize,
        /// Seed for the sphere-random fixture
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the cover graph as JSON
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Stable parallelizability of a lens space, or a search for one
    Lens {
        /// Odd prime
        #[arg(long)]
        p: u64,
        /// Comma-separated weights b0,b1,...
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["search", "n"])]
        b: Option<Vec<u64>>,
        /// Search weight tuples in lexicographic order
        #[arg(long, requires = "n")]
        search: bool,
        /// Lens space dimension is 2n+1
        #[arg(long, requires = "search")]
        n: Option<usize>,
    },
    /// Sufficient Parseval frame size for a rank-k bundle over a d-manifold
    Bound {
        /// Manifold dimension
        #[arg(long)]
        d: usize,
        /// Bundle rank
        #[arg(long)]
        k: usize,
        /// real or complex
        #[arg(long, default_value = "real")]
        field: Field,
    },
    /// Decide whether a tangent bundle admits a Parseval frame of size d+1
    Decide {
        /// Descriptor JSON file, or inline JSON
        #[arg(long)]
        descriptor: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Mobius,
    Trivial,
    SphereRandom,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(code: u8, kind: &'static str, message: impl Into<String>) -> Self {
        Self { code, kind, message: message.into() }
    }
}

fn frame_kind(e: &FrameError) -> &'static str {
    match e {
        FrameError::NotAFrame { .. } => "NotAFrame",
        FrameError::NotParseval { .. } => "NotParseval",
        FrameError::Dimension(_) => "DimensionError",
        FrameError::Domain(_) => "DomainError",
        FrameError::IndexOutOfRange { .. } => "IndexOutOfRange",
        FrameError::GenerationFailed { .. } => "GenerationFailed",
    }
}

impl From<FrameError> for CliError {
    fn from(e: FrameError) -> Self {
        CliError::new(2, frame_kind(&e), e.to_string())
    }
}

impl From<MatrixTextError> for CliError {
    fn from(e: MatrixTextError) -> Self {
        match e {
            MatrixTextError::Io(_) => CliError::new(1, "IoError", e.to_string()),
            MatrixTextError::Parse { .. } => CliError::new(1, "ParseError", e.to_string()),
            MatrixTextError::Frame(f) => f.into(),
        }
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        let code = if matches!(e, SampleError::Domain(_)) { 2 } else { 1 };
        CliError::new(code, "SampleError", e.to_string())
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        let kind = match e {
            BundleError::NotAFrame { .. } => "NotAFrame",
            BundleError::GenerationFailed { .. } => "GenerationFailed",
            _ => "BundleError",
        };
        CliError::new(2, kind, e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Frame(f) => f.into(),
            HarnessError::Bundle(b) => b.into(),
            HarnessError::Sample(s) => s.into(),
            HarnessError::Io(_) | HarnessError::Json(_) | HarnessError::Config(_) => {
                CliError::new(1, e.kind(), e.to_string())
            }
            _ => CliError::new(2, e.kind(), e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Frame(f) => f.into(),
            SpectralError::Bundle(b) => b.into(),
            SpectralError::Sample(s) => s.into(),
            SpectralError::NotIGeneric { .. } => CliError::new(2, "NotIGeneric", e.to_string()),
            SpectralError::Domain(_) => CliError::new(2, "DomainError", e.to_string()),
        }
    }
}

impl From<InvariantError> for CliError {
    fn from(e: InvariantError) -> Self {
        CliError::new(2, e.kind(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(1, "IoError", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new(1, "JsonError", e.to_string())
    }
}

fn spectrum_line(s: &Spectrum) -> String {
    s.values.iter().map(|v| format!("{}", round_display(*v))).collect::<Vec<_>>().join(" ")
}

/// Shortest display after rounding to 12 significant digits, so E prints as "1 1".
fn round_display(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn parsevalize<T: Scalar>(a: &Frame<T>, t: Option<f64>, tol: &Tolerance) -> Result<(Frame<T>, Spectrum, Spectrum), CliError> {
    let before = a.spectrum(tol)?;
    let out = match t {
        Some(t) => a.retract_path(t, tol)?,
        None => a.parseval_retract(tol)?,
    };
    let after = out.spectrum(tol)?;
    Ok((out, before, after))
}

fn print_json(v: &serde_json::Value) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn spectrum_json<T: Scalar>(a: &Frame<T>, tol: &Tolerance) -> Result<serde_json::Value, CliError> {
    let s = a.spectrum(tol)?;
    let mult = s.multiplicities(tol.rel_gap);
    Ok(json!({
        "k": a.k(),
        "n": a.n(),
        "field": T::FIELD,
        "spectrum": s.values,
        "multiplicities": mult,
        "generic": mult.iter().all(|&m| m == 1),
        "parseval": a.is_parseval(tol),
        "tight_constant": a.tight_constant(tol),
        "min_relative_gap": s.min_relative_gap(),
    }))
}

fn read_descriptor(arg: &str) -> Result<ManifoldDescriptor, CliError> {
    let text = if arg.trim_start().starts_with('{') { arg.to_string() } else { std::fs::read_to_string(arg)? };
    ManifoldDescriptor::from_json(&text).map_err(|e| CliError::new(1, "JsonError", e.to_string()))
}

fn experiment_config(
    config: Option<&Path>,
    frames: Option<usize>,
    fields: Option<usize>,
    variance: Option<f64>,
    points: Option<usize>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(f) = frames {
        cfg.num_random_frames = f;
    }
    if let Some(v) = fields {
        cfg.num_fields = v;
    }
    if let Some(s) = variance {
        cfg.noise_variance = s;
    }
    if let Some(n) = points {
        cfg.sample_source = SampleSource::Fibonacci(n);
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Parsevalize { input, out, t, tol } => {
            let tol = tol.tolerance()?;
            let (frame, before, after) = match matrix_text::read_frame(&input)? {
                AnyFrame::Real(a) => {
                    let (b, s0, s1) = parsevalize(&a, t, &tol)?;
                    (AnyFrame::Real(b), s0, s1)
                }
                AnyFrame::Complex(a) => {
                    let (b, s0, s1) = parsevalize(&a, t, &tol)?;
                    (AnyFrame::Complex(b), s0, s1)
                }
            };
            matrix_text::write_frame_file(&out, &frame)?;
            println!("spectrum before: {}", spectrum_line(&before));
            println!("spectrum after: {}", spectrum_line(&after));
        }
        Command::Spectrum { input, tol } => {
            let tol = tol.tolerance()?;
            let v = match matrix_text::read_frame(&input)? {
                AnyFrame::Real(a) => spectrum_json(&a, &tol)?,
                AnyFrame::Complex(a) => spectrum_json(&a, &tol)?,
            };
            print_json(&v)?;
        }
        Command::Dilate { input, out, tol } => {
            let tol = tol.tolerance()?;
            let u = match matrix_text::read_frame(&input)? {
                AnyFrame::Real(a) => AnyFrame::Real(Frame::new(a.naimark_dilate(&tol)?)?),
                AnyFrame::Complex(a) => AnyFrame::Complex(Frame::new(a.naimark_dilate(&tol)?)?),
            };
            matrix_text::write_frame_file(&out, &u)?;
            let (n, _) = u.shape();
            println!("wrote {n}x{n} {} dilation to {}", u.field(), out.display());
        }
        Command::Experiment { config, out, frames, fields, variance, points, seed, threads } => {
            let cfg = experiment_config(config.as_deref(), frames, fields, variance, points, seed)?;
            let report = match threads {
                Some(t) => rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| CliError::new(1, "ThreadPoolError", e.to_string()))?
                    .install(|| reconstruction::run_experiment(&cfg))?,
                None => reconstruction::run_experiment(&cfg)?,
            };
            reconstruction::emit_report(&report, &out)?;
            let summary = report.summary();
            let best = summary.best_random_index.and_then(|i| summary.random.iter().find(|r| r.index == i));
            match (best, summary.separation_ratio) {
                (Some(b), Some(ratio)) => println!(
                    "parseval mean MSE {:.6e} | best random mean MSE {:.6e} (frame {}) | separation ratio {:.4}",
                    summary.parseval.stats.mean, b.stats.mean, b.index, ratio
                ),
                _ => println!("parseval mean MSE {:.6e} | no random frames", summary.parseval.stats.mean),
            }
        }
        Command::Cover { fixture, n, index, seed, graph, tol } => {
            let tol = tol.tolerance()?;
            let (bundle, flags, name) = match fixture {
                Fixture::Mobius => (spectral::mobius_fixture(n.unwrap_or(64))?, ManifoldFlags::CIRCLE, "mobius"),
                Fixture::Trivial => (spectral::trivial_fixture(n.unwrap_or(64))?, ManifoldFlags::CIRCLE, "trivial"),
                Fixture::SphereRandom => {
                    let sample = Arc::new(sampling::fibonacci_sphere(n.unwrap_or(1592), 1.0)?);
                    (bundle::random_bundle_frame(sample, 3, seed)?, ManifoldFlags::SPHERE, "sphere-random")
                }
            };
            let report = spectral::obstruction_report(&bundle, index, flags, &tol)?;
            if let Some(path) = graph {
                let cover = spectral::spectral_cover(&bundle, index, &tol)?;
                std::fs::write(path, cover.to_json()?)?;
            }
            let mut v = serde_json::to_value(&report)?;
            v["fixture"] = json!(name);
            v["points"] = json!(bundle.len());
            print_json(&v)?;
        }
        Command::Lens { p, b, search, n } => {
            if search {
                let n = n.expect("clap enforces --n with --search");
                let found = invariants::lens_search(p, n)?;
                print_json(&json!({
                    "p": p,
                    "n": n,
                    "dimension": 2 * n + 1,
                    "witness": found.as_ref().map(|l| l.weights().to_vec()),
                }))?;
            } else {
                let b = b.ok_or_else(|| CliError::new(1, "UsageError", "give --b or --search with --n"))?;
                let lens = LensSpace::new(p, b)?;
                print_json(&serde_json::to_value(invariants::lens_report(&lens))?)?;
            }
        }
        Command::Bound { d, k, field } => {
            print_json(&serde_json::to_value(invariants::parseval_size_bound(d, k, field)?)?)?;
        }
        Command::Decide { descriptor } => {
            let m = read_descriptor(&descriptor)?;
            print_json(&serde_json::to_value(invariants::decide_d_plus_1(&m)?)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind, "message": e.message }));
            ExitCode::from(e.code)
        }
    }
}
