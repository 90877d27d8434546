use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{Rotation3, Unit};
use tempfile::TempDir;
use twoview_cli::io::{format_matches, format_pose, parse_matches};
use twoview_cli::report::{Evaluation, Report};
use twoview_core::geometry::{Mat3, Vec3};
use twoview_core::simlab::{corrupt_matches, generate_scene, SceneConfig, SceneKind, TwoViewScene};
use twoview_core::RelativePose;

fn k() -> Mat3 {
    Mat3::new(800.0, 0.0, 320.0, 0.0, 800.0, 240.0, 0.0, 0.0, 1.0)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twoview"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scene(kind: SceneKind, n: usize, seed: u64) -> TwoViewScene {
    generate_scene(&SceneConfig {
        kind,
        n_points: n,
        seed,
        ..Default::default()
    })
    .unwrap()
}

/// Writes pixel matches, intrinsics and the true pose into `dir`.
fn write_inputs(dir: &Path, n: usize, noise_px: f64, outliers: f64, seed: u64) -> (PathBuf, PathBuf, PathBuf) {
    use rand::SeedableRng;
    let sc = scene(SceneKind::Normal, n, seed);
    let m = corrupt_matches(
        &sc,
        noise_px,
        outliers,
        &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed),
    );
    let matches = dir.join("matches.txt");
    let intrinsics = dir.join("k.txt");
    let truth = dir.join("truth.txt");
    std::fs::write(&matches, format_matches(&m.pairs, Some(&k()))).unwrap();
    std::fs::write(&intrinsics, "800 0 320\n0 800 240\n0 0 1\n").unwrap();
    std::fs::write(&truth, format_pose(&sc.pose_true)).unwrap();
    (matches, intrinsics, truth)
}

fn read_report(path: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn without_timing(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn noise_free_lirp_recovers_planted_pose() {
    let dir = TempDir::new().unwrap();
    let (m, k, t) = write_inputs(dir.path(), 30, 0.0, 0.0, 11);
    let out = dir.path().join("r.json");
    let res = dir.path().join("r.csv");
    let o = run(&[
        "estimate",
        "--matches",
        s(&m),
        "--intrinsics",
        s(&k),
        "--method",
        "lirp",
        "--truth",
        s(&t),
        "--out",
        s(&out),
        "--residuals",
        s(&res),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_report(&out);
    assert_eq!(r.status, "ok");
    assert!(r.metrics.unwrap().rotation_error_deg < 1e-6);
    assert_eq!(r.pairs.len(), 30);
    assert_eq!(r.pose.unwrap().rotation.len(), 9);
    let csv = std::fs::read_to_string(&res).unwrap();
    assert!(csv.starts_with("# twoview-residuals 1\nindex,inlier,residual_ligt\n"));
    assert_eq!(csv.lines().count(), 32);
}

#[test]
fn estimate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (m, k, _) = write_inputs(dir.path(), 300, 1.0, 0.8, 12);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&[
            "estimate",
            "--matches",
            s(&m),
            "--intrinsics",
            s(&k),
            "--method",
            "gnc-ransac",
            "--seed",
            "5",
            "--iters",
            "10",
            "--out",
            s(out),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(without_timing(&a), without_timing(&b));
    assert_eq!(read_report(&a).metadata.seed, 5);
}

#[test]
fn corrupt_file_reports_the_line() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("bad.txt");
    std::fs::write(&m, "twoview-matches 1 normalized\n0 0 0 0\n0 0 nan? 0\n").unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["estimate", "--matches", s(&m), "--method", "lirp", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ParseError") && err.contains("bad.txt:3"), "{err}");
    let r = read_report(&out);
    assert_eq!(r.status, "error");
    assert_eq!(r.error.unwrap().kind, "ParseError");
    assert!(r.pose.is_none());
}

#[test]
fn match_count_floor_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let (m, k, _) = write_inputs(dir.path(), 20, 0.0, 0.0, 13);
    let out = dir.path().join("r.json");
    let o = run(&[
        "estimate",
        "--matches",
        s(&m),
        "--intrinsics",
        s(&k),
        "--method",
        "lirp",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(read_report(&out).error.unwrap().kind, "TooFewMatches");
    let o = run(&[
        "estimate",
        "--matches",
        s(&m),
        "--intrinsics",
        s(&k),
        "--method",
        "lirp",
        "--min-matches",
        "6",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let o = run(&[
        "estimate",
        "--matches",
        s(&m),
        "--method",
        "lirp",
        "--min-matches",
        "6",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(read_report(&out).error.unwrap().kind, "MissingIntrinsics");
}

#[test]
fn estimator_failure_exits_three_with_error_report() {
    let dir = TempDir::new().unwrap();
    let (m, k, _) = write_inputs(dir.path(), 30, 0.0, 0.0, 14);
    let out = dir.path().join("r.json");
    let o = run(&[
        "estimate",
        "--matches",
        s(&m),
        "--intrinsics",
        s(&k),
        "--method",
        "gnc-ransac",
        "--ns",
        "31",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let r = read_report(&out);
    assert_eq!(r.status, "error");
    assert!(r.error.is_some() && r.pose.is_none());
}

#[test]
fn pixel_round_trip_is_lossless() {
    let sc = scene(SceneKind::Planar, 50, 15);
    let text = format_matches(&sc.clean_pairs, Some(&k()));
    let back = parse_matches(Path::new("m"), &text, Some(&k())).unwrap();
    for (a, b) in sc.clean_pairs.iter().zip(&back) {
        assert!(a.x.angle(&b.x) < 1e-9);
        assert!(a.x_prime.angle(&b.x_prime) < 1e-9);
    }
}

fn fake_report(dir: &Path, name: &str, pose: &RelativePose) -> PathBuf {
    let (m, k, _) = write_inputs(dir, 30, 0.0, 0.0, 16);
    let out = dir.join(name);
    assert!(run(&[
        "estimate",
        "--matches",
        s(&m),
        "--intrinsics",
        s(&k),
        "--method",
        "lirp",
        "--out",
        s(&out)
    ])
    .status
    .success());
    let mut r = read_report(&out);
    r.pose = Some(twoview_cli::report::PoseJson::from_pose(pose));
    std::fs::write(&out, serde_json::to_string(&r).unwrap()).unwrap();
    out
}

#[test]
fn evaluate_measures_rotation_error() {
    let dir = TempDir::new().unwrap();
    let truth = RelativePose::new(
        Rotation3::from_euler_angles(0.01, 0.02, -0.005),
        Vec3::new(1.0, 0.2, 0.1),
    );
    let tilt = Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::new(1.0, -2.0, 0.5)), 0.1f64.to_radians());
    let tilted = RelativePose::new(tilt * truth.rotation, truth.t());
    let truth_path = dir.path().join("gt.txt");
    std::fs::write(&truth_path, format_pose(&truth)).unwrap();
    let exact = fake_report(dir.path(), "exact.json", &truth);
    let off = fake_report(dir.path(), "off.json", &tilted);

    let out = dir.path().join("eval.json");
    let o = run(&[
        "evaluate",
        "--report",
        s(&exact),
        "--truth",
        s(&truth_path),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let e: Evaluation = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(e.mean_error_deg < 1e-12 && e.median_error_deg < 1e-12);

    let o = run(&[
        "evaluate",
        "--report",
        s(&off),
        "--truth",
        s(&truth_path),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let e: Evaluation = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((e.mean_error_deg - 0.1).abs() < 1e-9, "{}", e.mean_error_deg);

    // Two reports: per-pair errors plus aggregates.
    let o = run(&[
        "evaluate",
        "--report",
        s(&exact),
        "--truth",
        s(&truth_path),
        "--report",
        s(&off),
        "--truth",
        s(&truth_path),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let e: Evaluation = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(e.pairs.len(), 2);
    assert!((e.mean_error_deg - 0.05).abs() < 1e-9);
}

#[test]
fn evaluate_rejects_reports_without_pose() {
    let dir = TempDir::new().unwrap();
    let truth_path = dir.path().join("gt.txt");
    std::fs::write(&truth_path, "1 0 0 0 1 0 0 0 1 1 0 0\n").unwrap();
    let report = fake_report(
        dir.path(),
        "r.json",
        &RelativePose::from_matrix(&Mat3::identity(), Vec3::x()),
    );
    let mut r = read_report(&report);
    r.pose = None;
    std::fs::write(&report, serde_json::to_string(&r).unwrap()).unwrap();
    let o = run(&["evaluate", "--report", s(&report), "--truth", s(&truth_path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("DimensionMismatch"));
    let o = run(&[
        "evaluate",
        "--report",
        s(&report),
        "--report",
        s(&report),
        "--truth",
        s(&truth_path),
    ]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("DimensionMismatch"));
}

#[test]
fn empty_grid_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "schema_version = 1\nestimators = []\n").unwrap();
    let out = dir.path().join("o.csv");
    let o = run(&["simulate", "--config", s(&config), "--out", s(&out)]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("# twoview-simulate 1 config_sha256="));
    assert!(lines[1].starts_with("scene_kind,n_points,"));
}

#[test]
fn unknown_scene_kind_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "schema_version = 1\nscene_kinds = [\"spherical\"]\n").unwrap();
    let o = run(&[
        "simulate",
        "--config",
        s(&config),
        "--out",
        s(&dir.path().join("o.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ConfigError") && err.contains("`scene_kind`"), "{err}");
}

#[test]
fn simulate_rows_follow_the_grid() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        "schema_version = 1\nseed = 3\nn_trials = 4\nscene_kinds = [\"planar\", \"normal\"]\nnoise_px = [0.0, 0.1]\n",
    )
    .unwrap();
    let out = dir.path().join("o.csv");
    assert!(run(&["simulate", "--config", s(&config), "--out", s(&out)])
        .status
        .success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(2).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!((rows[0][0], rows[0][2]), ("planar", "0"));
    assert_eq!((rows[3][0], rows[3][2]), ("normal", "0.1"));
    assert!(rows.iter().all(|r| r.len() == 15 && r[5] == "4"));
}
