use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn parframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parframe")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_matrix(path: &str) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect()
}

#[test]
fn help_matches_golden() {
    let mut text = stdout(&parframe(&["--help"]));
    for c in ["parsevalize", "spectrum", "dilate", "experiment", "cover", "lens", "bound", "decide"] {
        text.push_str(&format!("=== {c}\n"));
        text.push_str(&stdout(&parframe(&[c, "--help"])));
    }
    let golden = include_str!("golden/help.txt");
    assert_eq!(text, golden);
}

#[test]
fn unknown_flags_are_rejected() {
    let o = parframe(&["bound", "--d", "2", "--k", "2", "--colour", "red"]);
    assert!(!o.status.success());
}

#[test]
fn parsevalize_examples() {
    let dir = tempfile::tempdir().unwrap();
    let e = write(dir.path(), "e.txt", "2 3 real\n1 0 0\n0 1 0\n");
    let out = dir.path().join("e_out.txt");
    let o = parframe(&["parsevalize", "--in", &e, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "spectrum before: 1 1\nspectrum after: 1 1\n");
    assert_eq!(read_matrix(out.to_str().unwrap()), vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);

    let a = write(dir.path(), "a.txt", "1 2 real\n1 1\n");
    let out = dir.path().join("a_out.txt");
    assert!(parframe(&["parsevalize", "--in", &a, "--out", out.to_str().unwrap()]).status.success());
    for x in &read_matrix(out.to_str().unwrap())[0] {
        assert!((x - 0.5f64.sqrt()).abs() < 1e-12);
    }

    let r = write(dir.path(), "r.txt", "2 3 real\n0.3 -1.2 2\n1.5 0.25 -0.7\n");
    let out = dir.path().join("r_out.txt");
    assert!(parframe(&["parsevalize", "--in", &r, "--out", out.to_str().unwrap(), "--t", "0"]).status.success());
    let (x, y) = (read_matrix(&r), read_matrix(out.to_str().unwrap()));
    for (u, v) in x.iter().flatten().zip(y.iter().flatten()) {
        assert!((u - v).abs() <= 1e-12);
    }
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.txt", "2 2 real\n1 1\n1 1\n");
    let out = dir.path().join("x.txt");
    let o = parframe(&["parsevalize", "--in", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "NotAFrame");

    let missing = dir.path().join("missing.txt");
    let o = parframe(&["parsevalize", "--in", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "IoError");

    let o = parframe(&["dilate", "--in", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectrum_and_dilate() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.txt", "2 3 real\n0.816496580927726 -0.408248290463863 -0.408248290463863\n0 0.707106781186548 -0.707106781186548\n");
    let v = json_out(&parframe(&["spectrum", "--in", &m]));
    assert_eq!(v["multiplicities"], serde_json::json!([2, 2]));
    assert_eq!(v["parseval"], true);
    let out = dir.path().join("u.txt");
    assert!(parframe(&["dilate", "--in", &m, "--out", out.to_str().unwrap()]).status.success());
    let u = read_matrix(out.to_str().unwrap());
    assert_eq!(u.len(), 3);
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|c| u[i][c] * u[j][c]).sum();
            assert!((dot - f64::from(i == j)).abs() < 1e-10);
        }
    }
}

#[test]
fn cover_examples() {
    assert_eq!(json_out(&parframe(&["cover", "--fixture", "mobius", "--n", "64"]))["cover_components"], 1);
    let t = json_out(&parframe(&["cover", "--fixture", "trivial", "--n", "64"]));
    assert_eq!(t["cover_components"], 2);
    assert_eq!(t["verdict"], "SectionExists");
    let s = json_out(&parframe(&["cover", "--fixture", "sphere-random", "--n", "1592", "--seed", "3"]));
    assert_ne!(s["verdict"], "SectionExists");
    let o = parframe(&["cover", "--fixture", "mobius", "--n", "7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cover_writes_graph() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    assert!(parframe(&["cover", "--fixture", "trivial", "--n", "8", "--graph", g.to_str().unwrap()]).status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(g).unwrap()).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 16);
}

#[test]
fn invariant_commands() {
    assert_eq!(json_out(&parframe(&["lens", "--p", "5", "--b", "1,1,1"]))["stably_parallelizable"], false);
    assert_eq!(json_out(&parframe(&["lens", "--p", "7", "--b", "1,2,3"]))["stably_parallelizable"], true);
    let w = json_out(&parframe(&["lens", "--search", "--p", "7", "--n", "2"]));
    assert!(w["witness"].is_array());
    assert!(json_out(&parframe(&["lens", "--search", "--p", "3", "--n", "3"]))["witness"].is_null());
    let b = json_out(&parframe(&["bound", "--d", "2", "--k", "2", "--field", "real"]));
    assert_eq!((b["n"].as_u64(), b["tangent_sharpened"].as_u64()), (Some(4), Some(3)));
    assert_eq!(json_out(&parframe(&["bound", "--d", "3", "--k", "1", "--field", "complex"]))["n"], 2);

    let dir = tempfile::tempdir().unwrap();
    let cp2 = write(dir.path(), "cp2.json", r#"{"dim": 4, "orientable": true, "stably_parallelizable": false, "h1_z2_trivial": true}"#);
    assert_eq!(json_out(&parframe(&["decide", "--descriptor", &cp2]))["verdict"], "NotExists");
    let d = json_out(&parframe(&["decide", "--descriptor", r#"{"dim": 3, "orientable": true}"#]));
    assert_eq!(d["verdict"], "Exists");
    let o = parframe(&["decide", "--descriptor", r#"{"dim": 7, "homology_sphere": true, "stably_parallelizable": false}"#]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "InconsistentDescriptor");
}

fn run_toy(dir: &Path, threads: &str) -> Output {
    parframe(&[
        "experiment", "--out", dir.to_str().unwrap(), "--frames", "3", "--fields", "3", "--points", "200", "--seed", "1",
        "--threads", threads,
    ])
}

#[test]
fn toy_experiment_is_deterministic_and_separated() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let start = std::time::Instant::now();
    let oa = run_toy(a.path(), "1");
    assert!(oa.status.success(), "{}", String::from_utf8_lossy(&oa.stderr));
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert!(run_toy(b.path(), "4").status.success());
    assert!(run_toy(c.path(), "4").status.success());
    for f in ["mse_parseval.csv", "mse_random.csv", "cdf_parseval.csv", "cdf_best_random.csv", "histogram.csv", "summary.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
        assert_eq!(x, std::fs::read(c.path().join(f)).unwrap(), "{f}");
    }
    let line = stdout(&oa);
    assert!(line.contains("separation ratio"), "{line}");
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(a.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["separation_ratio"].as_f64().unwrap() > 1.0);
}

#[test]
fn experiment_config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"num_random_frames": 1, "num_fields": 2, "sample_source": {"fibonacci": 60}, "master_seed": 9}"#);
    let out = dir.path().join("out");
    let o = parframe(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out.join("mse_parseval.csv")).unwrap().lines().count(), 3);
    let o = parframe(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap(), "--variance=0"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "ConfigError");
}

#[test]
fn toy_separation_agrees_with_the_trace_law() {
    use parframe::{bundle, reconstruction, sampling};
    use std::sync::Arc;
    let s = Arc::new(sampling::fibonacci_sphere(200, 1.0).unwrap());
    let parseval = reconstruction::expected_field_mse(&bundle::projection_frame(Arc::clone(&s)), 0.01).unwrap();
    for i in 1..=3 {
        let b = bundle::random_bundle_frame(Arc::clone(&s), 3, reconstruction::frame_seed(1, i)).unwrap();
        assert!(reconstruction::expected_field_mse(&b, 0.01).unwrap() / parseval > 1.0);
    }
}
