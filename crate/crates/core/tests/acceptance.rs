//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Rotation2};
use num_complex::Complex64;
use parframe::frame::max_abs;
use parframe::invariants::{self, LensSpace};
use parframe::reconstruction::{self, ExperimentConfig, MeasurementNoise, Reconstructor, SampleSource};
use parframe::sampling::fibonacci_sphere;
use parframe::spectral::{self, ManifoldFlags, Verdict};
use parframe::{bundle, seed, Field, Frame, RealFrame, Scalar, Tolerance};
use rand::Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion(name: &str, budget_s: Option<f64>, f: impl FnOnce() -> Outcome, failures: &mut Vec<String>) {
    let start = Instant::now();
    let mut o = f();
    let secs = start.elapsed().as_secs_f64();
    if let Some(b) = budget_s {
        if secs >= b {
            o.pass = false;
            o.detail.push_str(&format!("; over time budget {b} s"));
        }
    }
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag}  {name:<34} {:.2} s  {}", secs, o.detail);
    if !o.pass {
        failures.push(name.to_string());
    }
}

fn random_unitary<T: Scalar>(n: usize, s: u64) -> DMatrix<T> {
    Frame::<T>::random(n, n, s).unwrap().into_matrix().qr().q()
}

/// Worst (identity, idempotence, reconstruction, equivariance) deviations.
fn retraction_errors<T: Scalar>(k: usize, n: usize, s: u64) -> [f64; 4] {
    let tol = Tolerance::default();
    let a = Frame::<T>::random(k, n, s).unwrap();
    let (p, b) = a.polar_parts(&tol).unwrap();
    let ident = b.frame_operator().deviation_from_scalar(1.0);
    let idem = max_abs(&(b.parseval_retract(&tol).unwrap().matrix() - b.matrix()));
    let recon = max_abs(&(&p * b.matrix() - a.matrix()));
    let m = random_unitary::<T>(k, seed::sub_seed(s, 1));
    let nn = random_unitary::<T>(n, seed::sub_seed(s, 2));
    let moved = Frame::new(&m * a.matrix() * nn.adjoint()).unwrap().parseval_retract(&tol).unwrap();
    let equi = max_abs(&(moved.matrix() - &m * b.matrix() * nn.adjoint()));
    [ident, idem, recon, equi]
}

fn retraction_suite() -> Outcome {
    let mut worst = [0f64; 4];
    for i in 0..1000u64 {
        let k = 1 + (i % 6) as usize;
        let n = k + ((i / 6) % (13 - k as u64)) as usize;
        let e = if i % 2 == 0 {
            retraction_errors::<f64>(k, n, 10_000 + i)
        } else {
            retraction_errors::<Complex64>(k, n, 10_000 + i)
        };
        for j in 0..4 {
            worst[j] = worst[j].max(e[j]);
        }
    }
    let pass = worst[0] <= 1e-10 && worst[1] <= 1e-10 && worst[2] <= 1e-10 && worst[3] <= 1e-9;
    outcome(
        pass,
        format!(
            "max |BB^H-I| {:.1e}, idempotence {:.1e}, A-PB {:.1e}, equivariance {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn projection_parsevality() -> Outcome {
    let s = Arc::new(fibonacci_sphere(1592, 1.0).unwrap());
    let b = bundle::projection_frame(s);
    let worst =
        b.frames().iter().map(|f| f.frame_operator().deviation_from_scalar(1.0)).fold(0.0, f64::max);
    outcome(worst <= 1e-10, format!("{} points, max |σσ^T - I| {:.1e}", b.len(), worst))
}

fn experiment() -> Outcome {
    let cfg = ExperimentConfig {
        num_random_frames: 50,
        num_fields: 50,
        noise_variance: 0.01,
        sample_source: SampleSource::Fibonacci(1592),
        master_seed: 2024,
    };
    let rep = reconstruction::run_experiment(&cfg).unwrap();
    let zero = reconstruction::run_experiment_with_noise(&cfg, MeasurementNoise::Zero).unwrap();
    let p = rep.parseval_summary();
    let analytic = cfg.noise_variance * 2.0;
    let a_ok = (p.mean / analytic - 1.0).abs() <= 0.02;
    let min_random = rep.random_summaries().iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    let b_ok = rep.random_frames.len() == 50 && p.max < min_random;
    let zero_max = zero
        .parseval_mses
        .iter()
        .chain(zero.random_frames.iter().flat_map(|f| &f.mses))
        .copied()
        .fold(0.0, f64::max);
    let c_ok = zero_max <= 1e-18;
    outcome(
        a_ok && b_ok && c_ok,
        format!(
            "(a) Parseval mean {:.5} vs {analytic} ({:+.2}%) {}; (b) max Parseval {:.5} < min random {:.5} {}; (c) zero-noise max {:.1e} {}",
            p.mean,
            100.0 * (p.mean / analytic - 1.0),
            ok(a_ok),
            p.max,
            min_random,
            ok(b_ok),
            zero_max,
            ok(c_ok)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b { "ok" } else { "FAILED" }
}

fn per_frame_law() -> Outcome {
    let variance = 0.01;
    let draws = 100_000;
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let mut rng = seed::rng_from(seed::sub_seed(77, i));
        let l1: f64 = rng.random_range(0.2..3.0);
        let l2: f64 = rng.random_range(0.2..3.0);
        let u = Rotation2::new(rng.random_range(0.0..std::f64::consts::TAU));
        let u = DMatrix::from_iterator(2, 2, u.matrix().iter().copied());
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![l1.sqrt(), l2.sqrt()]));
        let v = RealFrame::random(2, 3, seed::sub_seed(78, i)).unwrap().parseval_retract(&Tolerance::default()).unwrap();
        let frame = RealFrame::new(u * d * v.matrix()).unwrap();
        let law = variance * (1.0 / l1 + 1.0 / l2);
        let r = Reconstructor::new(&frame, &Tolerance::default()).unwrap();
        let signal = DVector::from_vec(vec![0.4, -1.1]);
        let clean = reconstruction::measure(&frame, &signal).unwrap();
        let sd = variance.sqrt();
        let mut acc = 0.0;
        for _ in 0..draws {
            let e = DVector::from_fn(3, |_, _| sd * rng.sample::<f64, _>(StandardNormal));
            acc += (r.apply(&(&clean + e)).unwrap() - &signal).norm_squared();
        }
        worst = worst.max((acc / draws as f64 / law - 1.0).abs());
    }
    outcome(worst <= 0.02, format!("50 frames x 1e5 draws, worst relative deviation {:.2}%", 100.0 * worst))
}

fn cover_ground_truth() -> Outcome {
    let tol = Tolerance::default();
    let mut bad = Vec::new();
    for n in (8..=512).step_by(2) {
        let m = spectral::spectral_cover(&spectral::mobius_fixture(n).unwrap(), 1, &tol).unwrap();
        let t = spectral::spectral_cover(&spectral::trivial_fixture(n).unwrap(), 1, &tol).unwrap();
        if m.component_count() != 1 || t.component_count() != 2 || !m.deck_invariant() || !t.deck_invariant() {
            bad.push(n);
        }
    }
    outcome(bad.is_empty(), format!("N = 8, 10, ..., 512; failing N: {bad:?}"))
}

fn sphere_echo() -> Outcome {
    let s = Arc::new(fibonacci_sphere(1592, 1.0).unwrap());
    let tol = Tolerance::default().with_rel_gap(1e-3);
    let mut counts = std::collections::BTreeMap::new();
    let mut section = 0;
    for seed in 0..20 {
        let b = bundle::random_bundle_frame(Arc::clone(&s), 3, 5000 + seed).unwrap();
        let r = spectral::obstruction_report(&b, 1, ManifoldFlags::SPHERE, &tol).unwrap();
        if r.verdict == Verdict::SectionExists {
            section += 1;
        }
        let key = match r.verdict_without_ambiguous {
            Some(v) => format!("{:?}({:?})", r.verdict, v),
            None => format!("{:?}", r.verdict),
        };
        *counts.entry(key).or_insert(0) += 1;
    }
    outcome(section == 0, format!("20 frames, SectionExists {section}; verdicts {counts:?}"))
}

fn brute_lens(p: u64, b: &[u64]) -> bool {
    let n = b.len() as u64 - 1;
    n < p
        && (1..=n / 2).all(|j| {
            b.iter()
                .map(|&x| (0..2 * j).fold(1u64, |acc, _| acc * x % p))
                .sum::<u64>()
                % p
                == 0
        })
}

fn lens_arithmetic() -> Outcome {
    let mut mismatches = 0;
    let mut checked = 0;
    for p in [3u64, 5, 7, 11, 13] {
        for n in 0..=4usize {
            let total = (p - 1).pow(n as u32 + 1);
            for code in 0..total {
                let mut c = code;
                let b: Vec<u64> = (0..=n)
                    .map(|_| {
                        let d = c % (p - 1);
                        c /= p - 1;
                        d + 1
                    })
                    .collect();
                checked += 1;
                if invariants::lens_stably_parallelizable(&LensSpace::new(p, b.clone()).unwrap()) != brute_lens(p, &b) {
                    mismatches += 1;
                }
            }
        }
    }
    let w1 = !invariants::lens_stably_parallelizable(&LensSpace::new(3, vec![1, 1, 1, 1]).unwrap());
    let w2 = !invariants::lens_stably_parallelizable(&LensSpace::new(5, vec![1, 1, 1]).unwrap());
    let mut searches = Vec::new();
    for n in 1..=3usize {
        let p = (3u64..).find(|&p| invariants::is_odd_prime(p) && p % (n as u64 + 1) == 1 && p > n as u64).unwrap();
        let found = invariants::lens_search(p, n).unwrap();
        searches.push((p, n, found.map(|l| l.weights().to_vec())));
    }
    let s_ok = searches.iter().all(|(p, _, w)| w.as_ref().is_some_and(|w| brute_lens(*p, w)));
    outcome(
        mismatches == 0 && w1 && w2 && s_ok,
        format!(
            "{checked} tuples, {mismatches} mismatches; L(3,(1,1,1,1)) false {}, L(5,(1,1,1)) false {}; searches {searches:?}",
            ok(w1),
            ok(w2)
        ),
    )
}

fn bound_grid() -> Outcome {
    let mut bad = 0;
    for d in 0..=10 {
        for k in 1..=10 {
            if invariants::parseval_size_bound(d, k, Field::Real).unwrap().n != d + k {
                bad += 1;
            }
            if invariants::parseval_size_bound(d, k, Field::Complex).unwrap().n != d / 2 + k {
                bad += 1;
            }
        }
    }
    let bloch = (1..=10).all(|k| invariants::parseval_size_bound(3, k, Field::Complex).unwrap().n == k + 1);
    outcome(bad == 0 && bloch, format!("d 0..=10, k 1..=10: {bad} mismatches; complex d = 3 gives k+1 {}", ok(bloch)))
}

fn emitted_bytes(cfg: &ExperimentConfig, threads: usize) -> Vec<Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let rep = pool.install(|| reconstruction::run_experiment(cfg)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = reconstruction::emit_report(&rep, dir.path()).unwrap();
    paths.iter().map(|p| std::fs::read(p).unwrap()).collect()
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig {
        num_random_frames: 3,
        num_fields: 4,
        sample_source: SampleSource::Fibonacci(200),
        master_seed: 1,
        ..Default::default()
    };
    let a = emitted_bytes(&cfg, 1);
    let b = emitted_bytes(&cfg, 1);
    let c = emitted_bytes(&cfg, 4);
    let d = emitted_bytes(&cfg, 4);
    outcome(a == b && a == c && a == d, format!("{} files byte-identical over 2 runs x threads {{1, 4}}", a.len()))
}

fn main() {
    let mut failures = Vec::new();
    criterion("parseval retraction suite", Some(5.0), retraction_suite, &mut failures);
    criterion("projection frame parsevality", Some(1.0), projection_parsevality, &mut failures);
    criterion("reconstruction experiment F=V=50", Some(60.0), experiment, &mut failures);
    criterion("per-frame expected MSE law", None, per_frame_law, &mut failures);
    criterion("spectral cover ground truth", Some(2.0), cover_ground_truth, &mut failures);
    criterion("sphere obstruction echo", Some(30.0), sphere_echo, &mut failures);
    criterion("lens space arithmetic", Some(5.0), lens_arithmetic, &mut failures);
    criterion("parseval size bounds", None, bound_grid, &mut failures);
    criterion("determinism", None, determinism, &mut failures);
    if failures.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", failures.len(), failures.join(", "));
        std::process::exit(1);
    }
}
