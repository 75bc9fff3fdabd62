//! End-to-end tests of the edslp binary: JSON report shape, CSV plot data,
//! route agreement, exit codes, and byte-level determinism.

use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn edslp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edslp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn spectrum_free_range_three() {
    let out = edslp(&["spectrum", "free", "--range", "3"]);
    let rep = stdout_json(&out);
    assert_eq!(rep["kappa"], 0);
    let evs = rep["eigenvalues"].as_array().unwrap();
    assert_eq!(evs.len(), 6);
    for ev in evs {
        let n = ev["index"].as_i64().unwrap();
        let re = ev["re"].as_f64().unwrap();
        assert!((re - PI * n as f64).abs() <= 1e-9, "slot {n}: {re}");
        assert_eq!(ev["im"].as_f64().unwrap(), 0.0);
        assert_eq!(ev["multiplicity"], 1);
    }
    assert_eq!(rep["checks"][0]["name"], "galerkin-kappa");
    assert_eq!(rep["checks"][0]["pass"], true);
}

#[test]
fn spectrum_paper_example_window() {
    let out = edslp(&["spectrum", "paper-example", "--window", "-10", "14.5", "-8", "8"]);
    let rep = stdout_json(&out);
    assert_eq!(rep["kappa"], 2);
    let evs = rep["eigenvalues"].as_array().unwrap();
    assert_eq!(evs.len(), 8);
    let doubles: Vec<&Value> =
        evs.iter().filter(|e| e["multiplicity"] == 2).collect();
    assert_eq!(doubles.len(), 2);
    for e in &doubles {
        assert!((e["re"].as_f64().unwrap() - PI).abs() <= 1e-8);
        assert_eq!(e["im"].as_f64().unwrap(), 0.0);
    }
    let pair_im = 3f64.sqrt() * PI;
    let complex_count = evs
        .iter()
        .filter(|e| {
            (e["re"].as_f64().unwrap() - PI).abs() <= 1e-8
                && (e["im"].as_f64().unwrap().abs() - pair_im).abs() <= 1e-8
        })
        .count();
    assert_eq!(complex_count, 2);
}

#[test]
fn missing_problem_file_exits_one() {
    let out = edslp(&["spectrum", "/nonexistent/problem.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn problem_file_round_trip() {
    let dir = std::env::temp_dir().join("edslp-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("robin.json");
    std::fs::write(
        &path,
        r#"{
            "label": "file-problem",
            "bc": "dirichlet",
            "r": { "poly": [0.3, 0.5, -0.6] },
            "p": { "poly": [0.4, -1.1, 0.9] }
        }"#,
    )
    .unwrap();
    let out = edslp(&["spectrum", path.to_str().unwrap(), "--range", "2"]);
    let rep = stdout_json(&out);
    assert_eq!(rep["problem"]["label"], "file-problem");
    assert!(!rep["eigenvalues"].as_array().unwrap().is_empty());
}

#[test]
fn norming_free_routes_agree() {
    let out = edslp(&["norming", "free", "--index", "1"]);
    let rep = stdout_json(&out);
    let recs = rep["norming"].as_array().unwrap();
    assert_eq!(recs.len(), 3);
    let routes: Vec<&str> =
        recs.iter().map(|r| r["route"].as_str().unwrap()).collect();
    assert_eq!(routes, ["direct", "characteristic", "two-spectra"]);
    for r in recs {
        let tol = if r["route"] == "two-spectra" { 5e-3 } else { 1e-6 };
        assert!((r["alpha_re"].as_f64().unwrap() - 1.0).abs() <= tol);
        assert!(r["alpha_im"].as_f64().unwrap().abs() <= tol);
        // beta = lambda^2 alpha
        assert!((r["beta_re"].as_f64().unwrap() - PI * PI).abs() <= PI * PI * tol);
    }
    let checks = rep["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["pass"] == true));
}

#[test]
fn norming_characteristic_rejects_multiple_eigenvalue() {
    let out = edslp(&[
        "norming",
        "paper-example",
        "--route",
        "characteristic",
        "--index",
        "-1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("multiplicity"));
}

#[test]
fn norming_direct_resolves_defective_chain() {
    let out = edslp(&["norming", "paper-example", "--route", "direct", "--index", "-1"]);
    let rep = stdout_json(&out);
    let recs = rep["norming"].as_array().unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0]["index"], -2);
    assert_eq!(recs[1]["index"], -1);
    assert!(recs[0]["alpha_re"].as_f64().unwrap().abs() <= 1e-8);
    assert!((recs[1]["alpha_re"].as_f64().unwrap() - 1.0 / (8.0 * PI)).abs() <= 1e-8);
}

#[test]
fn verify_single_problem_is_deterministic() {
    let a = edslp(&["verify", "free"]);
    let b = edslp(&["verify", "free"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let rep: Value = serde_json::from_slice(&a.stdout).unwrap();
    let checks = rep["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["pass"] == true));
}

#[test]
fn char_fn_real_matches_sine() {
    let out = edslp(&["plotdata", "free", "char-fn-real", "--grid", "21", "--window", "0", "10"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,s,c"));
    let mut rows = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let lam = cols[0];
        assert!((cols[1] - lam.sin()).abs() <= 1e-9, "s({lam})");
        assert!((cols[2] - lam * lam.cos()).abs() <= 1e-7, "c({lam})");
        rows += 1;
    }
    assert_eq!(rows, 21);
}

#[test]
fn char_fn_grid_vanishes_at_eigenvalue() {
    let out = edslp(&[
        "plotdata", "free", "char-fn-grid", "--grid", "5", "--window", "-6.4", "6.4", "-3.2",
        "3.2",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im,abs_char"));
    assert_eq!(lines.count(), 25);
}

#[test]
fn eigenfunction_matches_first_sine_mode() {
    let out = edslp(&["plotdata", "free", "eigenfunction:1", "--grid", "17"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y_re,y_im"));
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((cols[1] - (PI * cols[0]).sin()).abs() <= 1e-8, "y({})", cols[0]);
        assert!(cols[2].abs() <= 1e-12);
    }
}

#[test]
fn empty_grid_exits_one() {
    let out = edslp(&["plotdata", "free", "char-fn-real", "--grid", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty grid"));
}

#[test]
fn unresolved_eigenfunction_slot_exits_two() {
    // p = 0, r = -5 pi^2 x has a complex pair in slots 1 and 2
    let dir = std::env::temp_dir().join("edslp-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("complex-pair.json");
    std::fs::write(
        &path,
        r#"{
            "label": "complex-pair",
            "bc": "dirichlet",
            "r": { "poly": [0.0, -49.348022005446793] },
            "p": { "poly": [0.0] }
        }"#,
    )
    .unwrap();
    let out = edslp(&["plotdata", path.to_str().unwrap(), "eigenfunction:1"]);
    assert_eq!(out.status.code(), Some(2));
}
