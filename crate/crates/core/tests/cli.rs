//! Black-box tests of the command-line binary: artifact shapes, exit codes,
//! and byte-level determinism across thread counts.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_slicebench")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary launches")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("{name} exists"))
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

#[test]
fn characterize_writes_a_complete_transfer_artifact() {
    let dir = tempfile::tempdir().expect("tempdir");
    run_ok(&[
        "characterize",
        "--builtin",
        "double",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "transfer.json")).expect("valid JSON");
    for key in ["scenario_hash", "quadrature", "x", "y", "t", "u", "p", "splitter_ratio"] {
        assert!(v.get(key).is_some(), "transfer.json is missing {key}");
    }
    let t00 = &v["t"][0][0];
    let modulus = (t00[0].as_f64().unwrap().powi(2) + t00[1].as_f64().unwrap().powi(2)).sqrt();
    assert!((modulus - 2.0748e-3).abs() / 2.0748e-3 < 1e-3);
    assert_eq!(v["quadrature"]["points"], 32);
}

#[test]
fn scenario_files_round_trip_through_the_cli() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("double.json");
    std::fs::write(
        &path,
        slicebench::scenario::save_scenario(&slicebench::scenario::canonical_double_slit()),
    )
    .expect("scenario written");
    run_ok(&[
        "characterize",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let from_file: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "transfer.json")).expect("valid JSON");
    let builtin_dir = tempfile::tempdir().expect("tempdir");
    run_ok(&[
        "characterize",
        "--builtin",
        "double",
        "--out",
        builtin_dir.path().to_str().unwrap(),
    ]);
    let from_builtin: serde_json::Value =
        serde_json::from_str(&read(builtin_dir.path(), "transfer.json")).expect("valid JSON");
    assert_eq!(from_file, from_builtin);
}

#[test]
fn usage_and_config_errors_exit_with_code_two() {
    // Missing scenario file.
    let out = run(&["characterize", "--scenario", "/nonexistent/sc.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read scenario"));
    // Unknown distribution is a clap usage error.
    let out = run(&["correlate", "--builtin", "double", "--dist", "gaussian"]);
    assert_eq!(out.status.code(), Some(2));
    // Builtin and scenario are mutually exclusive.
    let out = run(&[
        "characterize",
        "--builtin",
        "double",
        "--scenario",
        "x.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Neither given.
    let out = run(&["characterize"]);
    assert_eq!(out.status.code(), Some(2));
    // Malformed grid spec.
    let out = run(&["correlate", "--builtin", "double", "--thetas", "0:1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn artifacts_are_byte_identical_across_thread_counts() {
    let one = tempfile::tempdir().expect("tempdir");
    let four = tempfile::tempdir().expect("tempdir");
    for (dir, threads) in [(&one, "1"), (&four, "4")] {
        run_ok(&[
            "correlate",
            "--builtin",
            "double",
            "--threads",
            threads,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        run_ok(&[
            "characterize",
            "--builtin",
            "double",
            "--threads",
            threads,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
    }
    for name in ["correlation.csv", "fit.json", "transfer.json"] {
        assert_eq!(
            read(one.path(), name),
            read(four.path(), name),
            "{name} differs between thread counts"
        );
    }
}

#[test]
fn thread_count_env_variable_is_honored_as_fallback() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = Command::new(bin())
        .args([
            "characterize",
            "--builtin",
            "double",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .env("SLICEBENCH_THREADS", "2")
        .output()
        .expect("binary launches");
    assert!(out.status.success());
    let bad = Command::new(bin())
        .args(["characterize", "--builtin", "double"])
        .env("SLICEBENCH_THREADS", "zero")
        .output()
        .expect("binary launches");
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn mzi_scan_writes_one_row_per_alpha() {
    let dir = tempfile::tempdir().expect("tempdir");
    run_ok(&[
        "mzi",
        "--builtin",
        "double",
        "--alphas",
        "0:6.2832:128",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let fringes = read(dir.path(), "fringes.csv");
    assert_eq!(data_rows(&fringes).len(), 128);
    let v: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "mzi_transfer.json")).expect("valid JSON");
    let visibility = v["fits"][0]["visibility"].as_f64().expect("fit present");
    assert!(visibility > 0.999, "visibility {visibility}");
}

#[test]
fn decompose_tables_have_the_documented_shapes_and_residuals_shrink() {
    let mut residuals = Vec::new();
    for level in ["2", "4", "6"] {
        let dir = tempfile::tempdir().expect("tempdir");
        run_ok(&[
            "decompose",
            "--builtin",
            "double",
            "--source",
            "1",
            "--port",
            "1",
            "--max-level",
            level,
            "--quad-points",
            "8",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        let coeff_text = read(dir.path(), "coefficients.csv");
        let coeffs = data_rows(&coeff_text);
        let w = (1usize << (level.parse::<i32>().unwrap() + 3)) - 1;
        assert_eq!(coeffs.len(), (1 + w) * (1 + w));
        // Dominant-mode share of the captured power.
        let powers: Vec<f64> = coeffs
            .iter()
            .map(|row| {
                let f: Vec<f64> = row.split(',').skip(5).map(|v| v.parse().unwrap()).collect();
                f[0] * f[0] + f[1] * f[1]
            })
            .collect();
        let share = powers[0] / powers.iter().sum::<f64>();
        assert!((share - 0.999956).abs() < 2e-5, "dominant share {share}");
        // Two ports for each of the two sources.
        let table_text = read(dir.path(), "power_table.csv");
        assert_eq!(data_rows(&table_text).len(), 4);
        // Pointwise reconstruction residual at y = 0.
        let rec_text = read(dir.path(), "reconstruction.csv");
        let rec = data_rows(&rec_text);
        assert_eq!(rec.len(), 256);
        let rms = (rec
            .iter()
            .map(|row| {
                let f: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
                (f[1] - f[3]).powi(2) + (f[2] - f[4]).powi(2)
            })
            .sum::<f64>()
            / 256.0)
            .sqrt();
        residuals.push(rms);
    }
    assert!(
        residuals[0] > residuals[1] && residuals[1] > residuals[2],
        "reconstruction residuals do not shrink: {residuals:?}"
    );
}

#[test]
fn out_of_range_selections_are_config_errors() {
    let out = run(&["decompose", "--builtin", "double", "--source", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["decompose", "--builtin", "double", "--port", "0"]);
    assert_eq!(out.status.code(), Some(2));
}
