use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn polyvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyvol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_code(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    v["error"]["code"].as_str().unwrap().to_string()
}

fn write_fixture(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn generated(name: &str, args: &[&str]) -> PathBuf {
    let out = polyvol(args);
    assert!(out.status.success());
    write_fixture(name, std::str::from_utf8(&out.stdout).unwrap())
}

#[test]
fn gen_birkhoff_shape() {
    let v = stdout_json(&polyvol(&["gen", "birkhoff", "--k", "3"]));
    assert_eq!(v["A"].as_array().unwrap().len(), 5);
    assert_eq!(v["A"][0].as_array().unwrap().len(), 9);
}

#[test]
fn gen_planar3_shape() {
    let v = stdout_json(&polyvol(&["gen", "planar3", "--r", "2"]));
    assert_eq!(v["A"].as_array().unwrap().len(), 7);
    assert_eq!(v["A"][0].as_array().unwrap().len(), 8);
}

#[test]
fn gen_unbalanced_transport_fails() {
    let out = polyvol(&["gen", "transport", "--rows", "1,2", "--cols", "2,2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_code(&out), "unbalanced-margins");
    assert!(out.stdout.is_empty());
}

#[test]
fn estimate_simplex_matches_closed_form() {
    let path = generated("simplex.json", &["gen", "simplex", "--alphas", "1,2,3,4", "--beta", "2"]);
    let v = stdout_json(&polyvol(&["estimate", "--input", path.to_str().unwrap()]));
    assert_eq!(v["schema"], "polyvol/1");
    assert_eq!(v["m"], 1);
    assert_eq!(v["n"], 4);
    assert_eq!(v["dim"], 3);
    // z_j = β / (n α_j)
    let (alphas, beta, n) = ([1.0f64, 2.0, 3.0, 4.0], 2.0f64, 4.0f64);
    let sum_sq: f64 = alphas.iter().map(|a| a * a).sum();
    let z: Vec<f64> = alphas.iter().map(|a| beta / (n * a)).collect();
    let b_sq: f64 = alphas.iter().zip(&z).map(|(a, z)| (a * z).powi(2)).sum();
    let want = n + z.iter().map(|v| v.ln()).sum::<f64>() + 0.5 * sum_sq.ln() - 0.5 * b_sq.ln();
    assert!((v["ln_estimate"].as_f64().unwrap() - want).abs() < 1e-9);
    assert!(v.get("reference").is_none());
    assert!(v.get("sandwich_ok").is_none());
}

#[test]
fn estimate_unbounded_reports_error() {
    let path = write_fixture("unbounded.json", r#"{"A": [[1.0, -1.0, 0.0]], "b": [0.0]}"#);
    let out = polyvol(&["estimate", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_code(&out), "possibly-unbounded");
}

#[test]
fn estimate_with_exact_verification() {
    let path = generated("transport23.json", &["gen", "transport", "--rows", "1,2", "--cols", "1,1,1"]);
    let v = stdout_json(&polyvol(&["estimate", "--input", path.to_str().unwrap(), "--verify", "exact"]));
    assert_eq!(v["sandwich_ok"], true);
    assert_eq!(v["reference"]["method"], "exact_recursive");
}

#[test]
fn verify_birkhoff3_exact() {
    let path = generated("birkhoff3.json", &["gen", "birkhoff", "--k", "3"]);
    let v = stdout_json(&polyvol(&["verify", "--input", path.to_str().unwrap(), "--method", "exact"]));
    assert_eq!(v["sandwich_ok"], true);
    let c = &v["center_summary"];
    assert!((c["geomean"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn verify_mc_is_deterministic_across_threads() {
    let path = generated("birkhoff3_mc.json", &["gen", "birkhoff", "--k", "3"]);
    let p = path.to_str().unwrap();
    let run = |threads: &str| {
        let args = ["verify", "--input", p, "--method", "mc", "--samples", "200000", "--seed", "5", "--threads", threads];
        stdout_json(&polyvol(&args))
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one, four);
    assert_eq!(one["sandwich_ok"], true);
    assert_eq!(one["reference"]["samples"], 200000);
}

#[test]
fn verify_exact_rejects_large_dimension() {
    let path = generated("simplex8.json", &["gen", "simplex", "--alphas", "1,1,1,1,1,1,1,1", "--beta", "1"]);
    let out = polyvol(&["verify", "--input", path.to_str().unwrap(), "--method", "exact"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_code(&out), "dimension-too-large");
}

#[test]
fn alpha0_default_and_coarse() {
    let v = stdout_json(&polyvol(&["alpha0"]));
    let a = v["alpha0"].as_f64().unwrap();
    assert!((a - 0.7148659168).abs() < 1e-9);
    assert!(v["upper_factor"].as_f64().unwrap() <= 1.19);
    let coarse = stdout_json(&polyvol(&["alpha0", "--tol", "1e-4"]));
    assert!((coarse["alpha0"].as_f64().unwrap() - 0.7148659168).abs() < 1e-4);
}

#[test]
fn demo_phase_branches() {
    let v = stdout_json(&polyvol(&["demo-phase", "--k", "20", "--eps", "0.2"]));
    let plus = v["plus"]["zeta_kk"].as_f64().unwrap();
    let minus = v["minus"]["zeta_kk"].as_f64().unwrap();
    assert!(plus > minus);
    let same = stdout_json(&polyvol(&["demo-phase", "--k", "6", "--eps", "0"]));
    assert_eq!(same["plus"], same["minus"]);
}

#[test]
fn planar3_table_rows() {
    let v = stdout_json(&polyvol(&["planar3-table", "--r-min", "2", "--r-max", "3"]));
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["m"], 19);
    for row in rows {
        let r = row["r"].as_f64().unwrap();
        assert!(row["difference"].as_f64().unwrap().abs() <= 10.0 * r * r);
    }
}

#[test]
fn planar3_table_csv_and_empty_range() {
    let out = polyvol(&["planar3-table", "--r-min", "2", "--r-max", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,n,m,ln_estimate,main_term,difference");
    assert!(lines[1].starts_with("2,8,7,"));
    let empty = stdout_json(&polyvol(&["planar3-table", "--r-min", "4", "--r-max", "3"]));
    assert_eq!(empty, Value::Array(vec![]));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(polyvol(&["bogus"]).status.code(), Some(1));
    assert_eq!(polyvol(&["gen", "birkhoff"]).status.code(), Some(1));
    let out = polyvol(&["estimate", "--input", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_code(&out), "usage");
}

#[test]
fn malformed_instance_is_computation_error() {
    let path = write_fixture("bad.json", r#"{"A": [[1.0, 2.0]], "b": [1.0, 2.0]}"#);
    let out = polyvol(&["estimate", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quiet_mode_keeps_stdout_clean() {
    let out = polyvol(&["--quiet", "planar3-table", "--r-min", "2", "--r-max", "2"]);
    assert!(out.stderr.is_empty());
    let verbose = polyvol(&["--verbose", "planar3-table", "--r-min", "2", "--r-max", "2"]);
    assert_eq!(out.stdout, verbose.stdout);
}
