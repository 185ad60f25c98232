//! End-to-end tests of the `zetasum` binary: wire formats, determinism
//! across thread counts, cache behavior, and exit codes.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zetasum"))
}

fn run_json(args: &[&str], threads: Option<&str>) -> (serde_json::Value, String, i32) {
    let mut cmd = bin();
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("ZETASUM_THREADS", t);
    }
    let out = cmd.output().expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    let value = serde_json::from_str(&stdout).unwrap_or(serde_json::Value::Null);
    (value, stdout, out.status.code().unwrap_or(-1))
}

#[test]
fn regint_paper_table_value() {
    let (v, _, code) = run_json(&["regint", "--expr", "x*log(x)", "--from", "1"], None);
    assert_eq!(code, 0);
    assert!((v["value"].as_f64().unwrap() - 0.25).abs() < 1e-8);
}

#[test]
fn sl_eig_values() {
    let (v, _, code) = run_json(
        &["sl", "eig", "--v", "1", "--w", "0", "--lambda", "0", "--count", "3"],
        None,
    );
    assert_eq!(code, 0);
    let eigs: Vec<f64> =
        v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (e, want) in eigs.iter().zip([9.8696044, 39.4784176, 88.8264396]) {
        assert!((e - want).abs() < 1e-6, "{e} vs {want}");
    }
}

#[test]
fn usage_error_exit_code() {
    let out = bin().args(["sl", "eig", "--v"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["regsum", "--expr", "log(x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn assemble_determinism_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = [
        "assemble",
        "--r",
        "1",
        "--bc0",
        "dirichlet",
        "--bc1",
        "dirichlet",
        "--sigma",
        "+1",
        "--orders",
        "3",
    ];

    // Identical runs on different thread counts produce byte-identical
    // reports.
    let (v1, raw1, c1) = run_json(&args, Some("1"));
    let (_v2, raw2, c2) = run_json(&args, Some("4"));
    assert_eq!(c1, 0);
    assert_eq!(c2, 0);
    assert_eq!(raw1, raw2, "reports differ across thread counts");

    // The assembled determinant is the known cylinder value.
    assert!((v1["assembled"].as_f64().unwrap() - (-1.6449336)).abs() < 3e-4);
    assert!(v1["discrepancy"].as_f64().unwrap() < 3e-4);

    // Cached rerun agrees exactly with the fresh value and is fast.
    let mut cached_args: Vec<&str> = args.to_vec();
    let cache_str = cache.to_str().unwrap().to_string();
    cached_args.extend_from_slice(&["--cache-dir", &cache_str]);
    let (v3, _, _) = run_json(&cached_args, Some("2"));
    let t0 = std::time::Instant::now();
    let (v4, _, _) = run_json(&cached_args, Some("2"));
    assert!(t0.elapsed().as_secs_f64() < 2.0, "cache hit should be fast");
    assert_eq!(v3, v4);
    // And matches the uncached computation field by field.
    assert_eq!(v3["assembled"], v1["assembled"]);
    assert_eq!(v3["regsum"], v1["regsum"]);
}

#[test]
fn assemble_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traces.csv");
    let out_path = dir.path().join("report.json");
    let mut cmd = bin();
    cmd.args([
        "assemble",
        "--r",
        "1",
        "--sigma",
        "+1",
        "--orders",
        "3",
        "--csv-traces",
        csv.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let out = cmd.output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    for field in [
        "mode_logdets",
        "regsum",
        "corrections",
        "zeta0_modes",
        "zeta0_sum",
        "assembled",
        "direct",
        "discrepancy",
        "convention",
        "sigma",
    ] {
        assert!(!v[field].is_null(), "missing report field '{field}'");
    }
    assert_eq!(v["convention"], "pf");
    // The CSV table and the --out copy both land on disk.
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("z,sum_trace2\n"));
    assert!(csv_text.lines().count() > 10);
    let file_copy: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(file_copy, v);
}

#[test]
fn tolerance_gate_exit_code() {
    // An absurdly tight tolerance must trip the numerical-failure exit code.
    let out = bin()
        .args([
            "assemble", "--r", "1", "--sigma", "+1", "--orders", "3", "--tolerance", "1e-30",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn phg_extract_profile_export() {
    let (v, _, code) = run_json(
        &["phg", "extract", "--r", "1", "--orders", "2"],
        None,
    );
    assert_eq!(code, 0);
    let profiles = v["profiles"].as_array().unwrap();
    assert_eq!(profiles.len(), 3);
    for p in profiles {
        assert!(p["i"].is_number());
        assert!(p["gamma"].is_number());
        assert!(p["phi"].is_array());
        assert!(p["g"].is_array());
        assert!(p["residual"].is_number());
    }
    // Leading profile of the unit cylinder is the constant 1/4.
    let g0: Vec<f64> =
        profiles[0]["g"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for g in g0 {
        assert!((g - 0.25).abs() < 1e-4);
    }
}

#[test]
fn sl_det_methods_agree() {
    let (gy, _, _) = run_json(
        &["sl", "det", "--v", "1", "--w", "0", "--lambda", "1", "--method", "gy"],
        None,
    );
    let (zeta, _, _) = run_json(
        &["sl", "det", "--v", "1", "--w", "0", "--lambda", "1", "--method", "zeta"],
        None,
    );
    let a = gy["logdet"].as_f64().unwrap();
    let b = zeta["logdet"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-5, "gy {a} vs zeta {b}");
    assert!((a - (2.0 * 1.0_f64.sinh()).ln()).abs() < 1e-8);
}
