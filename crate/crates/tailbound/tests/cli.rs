//! End-to-end tests of the `tailbound` binary: flag parsing, JSON and CSV
//! output shapes, exit codes, and determinism guarantees.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tailbound::dist::KnownDistribution;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json_of(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        stderr_of(out)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        stderr_of(out)
    );
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// 200 lognormal(0, 0.5) draws in a single-column CSV, with the header,
/// comment, and blank lines the reader promises to skip.
fn write_lognormal_csv(dir: &Path) -> PathBuf {
    let dist = KnownDistribution::lognormal(0.0, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut text = String::from("value\n# simulated observations\n\n");
    for x in dist.sample_n(&mut rng, 200) {
        writeln!(text, "{x}").unwrap();
    }
    let path = dir.join("sample.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn bound_emits_a_full_report() {
    // Boundary parameters (eta^2 = 2 beta nu) admit exactly one density, so
    // the constant objective must return the tail mass itself.
    let out = run(&[
        "bound",
        "--a",
        "0.5",
        "--beta",
        "0.5",
        "--eta",
        "1",
        "--nu",
        "1",
        "--objective",
        "constant:1",
    ]);
    let v = json_of(&out);
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
    assert_eq!(v["tail_class"], "degenerate-unique");
    for key in [
        "value",
        "tail_class",
        "x1_star",
        "omega_star",
        "rho_star",
        "density",
        "params_used",
        "diagnostics",
        "version",
    ] {
        assert!(v.get(key).is_some(), "missing field {key}");
    }
    assert_eq!(v["density"]["a"].as_f64().unwrap(), 0.5);
    assert_eq!(v["density"]["limiting"], false);
    assert!(v["density"]["knots"].as_array().unwrap().len() >= 2);
    assert_eq!(
        v["density"]["knots"].as_array().unwrap().len(),
        v["density"]["values"].as_array().unwrap().len()
    );
    assert_eq!(v["params_used"]["beta"].as_f64().unwrap(), 0.5);
    // The unique-density case needs no grid sweep; the field still reports.
    assert!(v["diagnostics"]["grid_points"].is_u64());
}

#[test]
fn inconsistent_parameters_exit_two() {
    // eta^2 = 1 exceeds 2 beta nu = 0.6: no convex density fits.
    let out = run(&[
        "bound",
        "--a",
        "0.5",
        "--beta",
        "0.3",
        "--eta",
        "1",
        "--nu",
        "1",
        "--objective",
        "constant:1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("eta^2 > 2*beta*nu"), "stderr: {err}");
}

#[test]
fn usage_problems_exit_one() {
    for args in [
        &["bound", "--a", "1", "--nonsense"][..],
        &["bound", "--a", "1", "--beta", "0.3"][..],
        &[
            "bound",
            "--a",
            "1",
            "--beta",
            "0.3",
            "--eta",
            "0.2",
            "--nu",
            "0.5",
            "--objective",
            "mystery:1",
        ][..],
        &["bound-ci", "--a", "1", "--objective", "constant:1"][..],
        &["simulate", "--truth", "cauchy:1", "--a", "1", "--intervals", "2:3", "--method", "gpd"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}: {}", stderr_of(&out));
    }
}

#[test]
fn calibration_failure_exits_three() {
    // Every observation sits right of the threshold, so the estimated
    // density rises at a and no decreasing-slope bound exists.
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..100 {
        writeln!(text, "{}", 2.0 + 0.005 * i as f64).unwrap();
    }
    let path = dir.path().join("shifted.csv");
    fs::write(&path, text).unwrap();
    let out = run(&[
        "estimate",
        "--data",
        path.to_str().unwrap(),
        "--a",
        "1.9",
        "--bootstrap",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("not decreasing"));
}

#[test]
fn degenerate_box_matches_the_point_bound() {
    let point = run(&[
        "bound",
        "--a",
        "0",
        "--beta",
        "0.3",
        "--eta",
        "0.3",
        "--nu",
        "0.3",
        "--objective",
        "stoploss:0.5,1.5,1",
    ]);
    let ci = run(&[
        "bound-ci",
        "--a",
        "0",
        "--beta-lo",
        "0.3",
        "--beta-hi",
        "0.3",
        "--eta-lo",
        "0.3",
        "--eta-hi",
        "0.3",
        "--nu-hi",
        "0.3",
        "--objective",
        "stoploss:0.5,1.5,1",
    ]);
    let vp = json_of(&point)["value"].as_f64().unwrap();
    let shaped = json_of(&ci);
    let vi = shaped["value"].as_f64().unwrap();
    assert!((vp - vi).abs() <= 1e-9, "point {vp} vs degenerate box {vi}");
    assert!(
        shaped["params_used"]["winning_subproblem"].is_string(),
        "missing winning_subproblem"
    );
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_lognormal_csv(dir.path());
    let args = [
        "bound-ci",
        "--a",
        "1.2",
        "--objective",
        "interval:1.5,2.5",
        "--data",
        data.to_str().unwrap(),
        "--bootstrap",
        "300",
        "--seed",
        "11",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success(), "stderr: {}", stderr_of(&first));
    assert_eq!(first.stdout, second.stdout, "same flags and seed must agree byte for byte");

    // The --out file carries exactly the stdout bytes.
    let out_path = dir.path().join("report.json");
    let mut with_out = args.to_vec();
    with_out.extend(["--out", out_path.to_str().unwrap()]);
    let third = run(&with_out);
    assert!(third.status.success());
    assert!(third.stdout.is_empty());
    assert_eq!(fs::read(&out_path).unwrap(), first.stdout);
}

#[test]
fn estimate_reports_ordered_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_lognormal_csv(dir.path());
    let out = run(&[
        "estimate",
        "--data",
        data.to_str().unwrap(),
        "--a",
        "1.2",
        "--bootstrap",
        "300",
        "--seed",
        "7",
    ]);
    let v = json_of(&out);
    assert_eq!(v["n"].as_u64().unwrap(), 200);
    let level = v["per_parameter_level"].as_f64().unwrap();
    assert!((level - (1.0 - 0.05 / 3.0)).abs() <= 1e-12);
    for name in ["beta", "eta"] {
        let p = &v[name];
        let (lo, point, hi) = (
            p["lo"].as_f64().unwrap(),
            p["point"].as_f64().unwrap(),
            p["hi"].as_f64().unwrap(),
        );
        assert!(lo <= point && point <= hi, "{name}: {lo} <= {point} <= {hi}");
        assert!(lo > 0.0);
    }
    let nu = &v["nu"];
    assert!(nu["point"].as_f64().unwrap() <= nu["hi"].as_f64().unwrap());
    let suggestion = &v["suggested_threshold"];
    assert!(suggestion["threshold"].as_f64().unwrap() > 0.0);
    assert!(suggestion["points_above"].as_u64().unwrap() > 50);
}

#[test]
fn known_parameter_invocation_reproduces_the_certified_bound() {
    // Same lognormal(0, 0.5) tail geometry the acceptance suite certifies.
    let out = run(&[
        "bound",
        "--a",
        "3.1",
        "--beta",
        "0.0118233",
        "--eta",
        "0.0198943",
        "--nu",
        "0.0354609",
        "--objective",
        "interval:4,5",
    ]);
    let v = json_of(&out);
    let value = v["value"].as_f64().unwrap();
    assert!((3.30e-3..=3.38e-3).contains(&value), "value {value:e}");
    assert_eq!(v["tail_class"], "attained-light");
}

#[test]
fn newsvendor_subcommand_solves_both_calibrations() {
    let matched = run(&["app", "newsvendor", "--p", "7", "--c", "1", "--curve", "5"]);
    let v = json_of(&matched);
    let q = v["q_star"].as_f64().unwrap();
    assert!((64.0..=73.0).contains(&q), "demand-matched q* {q}");
    assert!(v["value"].as_f64().unwrap() > 0.0);
    let curve = v["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 5);
    assert_eq!(curve[0][0].as_f64().unwrap(), 0.0);
    assert_eq!(curve[0][1].as_f64().unwrap(), 0.0);

    let quoted = run(&[
        "app",
        "newsvendor",
        "--p",
        "7",
        "--c",
        "1",
        "--beta",
        "0.7",
        "--eta",
        "0.007",
        "--nu",
        "0.0003",
        "--q-lo",
        "0",
        "--q-hi",
        "193.26",
    ]);
    let q = json_of(&quoted)["q_star"].as_f64().unwrap();
    assert!((160.0..=173.0).contains(&q), "quoted-triple q* {q}");
}

#[test]
fn entropic_and_heatmap_emit_csv() {
    let out = run(&["app", "entropic", "--dist", "exp:1", "--a", "0.35667494393873245"]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["theta", "value"]);
    assert_eq!(rows.len(), 6);
    let risks: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(risks.windows(2).all(|w| w[0] < w[1]), "risks not increasing: {risks:?}");

    let out = run(&["app", "heatmap", "--cells", "0.85:0.86"]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["c_pct", "d_pct", "c", "d", "truth", "bound", "ratio"]);
    assert_eq!(rows.len(), 2);
    let ratio: f64 = rows[1][6].parse().unwrap();
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn simulate_emits_a_deterministic_coverage_table() {
    let args = [
        "simulate",
        "--truth",
        "exp:1",
        "--a",
        "0.35667494393873245",
        "--intervals",
        "1:2",
        "--n",
        "60",
        "--reps",
        "10",
        "--bootstrap",
        "150",
        "--method",
        "worstcase",
        "--seed",
        "3",
    ];
    let first = run(&args);
    let rows = csv_rows(&first);
    assert_eq!(rows[0], ["c", "d", "truth", "mean_upper_bound", "coverage", "failures"]);
    assert_eq!(rows.len(), 2);
    let truth: f64 = rows[1][2].parse().unwrap();
    let expected = (-1.0f64).exp() - (-2.0f64).exp();
    assert!((truth - expected).abs() <= 1e-12, "truth {truth} vs {expected}");
    let coverage: f64 = rows[1][4].parse().unwrap();
    assert!((0.0..=1.0).contains(&coverage));
    let failures: u64 = rows[1][5].parse().unwrap();
    assert!(failures <= 10);

    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
}
