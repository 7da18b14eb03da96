use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitdim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn first_estimate(report: &Value) -> f64 {
    report["estimates"][0]["value"].as_f64().unwrap()
}

#[test]
fn dim_of_parabolic_map_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("k2.csv");
    let r = json(&["dim", "--system", "k2", "--x0", "0.5", "--csv", csv.to_str().unwrap()]);
    assert!((first_estimate(&r) - 0.5).abs() < 0.05);
    assert_eq!(r["orbit_length"], 1_000_000);
    let methods: Vec<&str> = r["estimates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["method"].as_str().unwrap())
        .collect();
    assert_eq!(methods, ["neighborhood_slope", "box_count_slope", "tail_exponent"]);

    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon,measure,method"));
    let eps: Vec<f64> = lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            assert_eq!(cols.len(), 3);
            assert_eq!(cols[2], "exact_1d");
            cols[0].parse().unwrap()
        })
        .collect();
    assert_eq!(eps.len(), 48);
    assert!(eps.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn dim_of_stable_node() {
    let r = json(&["dim", "--system", "node-ex1"]);
    assert!(first_estimate(&r) <= 0.1);
    assert_eq!(r["termination"]["reason"], "converged");
}

#[test]
fn missing_config_is_an_input_error() {
    let out = run(&["dim", "--config", "/definitely/not/here.sys"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_catalog_entry_is_an_input_error() {
    assert_eq!(run(&["dim", "--system", "nope"]).status.code(), Some(2));
}

#[test]
fn classify_saddle() {
    let r = json(&["classify", "--system", "saddle-fig2"]);
    assert_eq!(r["verdict"], "hyperbolic_saddle");
    assert_eq!(r["evidence"], "spectral");
    assert_eq!(r["spectrum"]["n_plus"], 1);
    assert_eq!(r["spectrum"]["n_minus"], 1);
}

#[test]
fn classify_with_detector() {
    let r = json(&["classify", "--system", "k3", "--fractal"]);
    assert_eq!(r["verdict"], "nonhyperbolic");
    assert_eq!(r["evidence"], "projective_dimension");
    let d = r["projective_dimensions"][0]["value"].as_f64().unwrap();
    assert!((d - 2.0 / 3.0).abs() < 0.05);
    assert!((r["predicted_dimension"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn classify_detector_is_silent_on_node() {
    let r = json(&["classify", "--system", "node-ex1", "--fractal"]);
    assert_eq!(r["verdict"], "no_evidence");
}

#[test]
fn classify_flow() {
    let r = json(&["classify", "--system", "flow-m2"]);
    assert_eq!(r["verdict"], "nonhyperbolic");
    assert_eq!(r["kind"], "flow");
    assert_eq!(r["predicted_dimension"], 0.5);
}

#[test]
fn manifold_quadratic_coefficient() {
    let r = json(&["manifold", "--system", "saddle-ex2-template", "--set", "λ1=0.5,λ2=2,b1=1"]);
    let c2 = r["expansion"]["coefficients"][0].as_f64().unwrap();
    assert!((c2 + 4.0 / 7.0).abs() < 1e-12);
    assert!(r["nondegeneracy"].is_null());
}

#[test]
fn manifold_center() {
    let r = json(&["manifold", "--system", "center-2d"]);
    assert_eq!(r["nondegeneracy"]["k"], 3);
    let pd = r["nondegeneracy"]["predicted_dimension"].as_f64().unwrap();
    assert!((pd - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(r["restricted_map"]["coefficients"][3], 1.0);
}

#[test]
fn manifold_resonance_is_a_refusal() {
    let out = run(&["manifold", "--system", "saddle-ex2-template", "--set", "λ1=0.5,λ2=0.25,b1=1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resonance"));
}

#[test]
fn manifold_draws_match_closed_forms() {
    let r = json(&["manifold", "--system", "saddle-ex2-template", "--draws", "20", "--seed", "7"]);
    assert_eq!(r["pass"], true);
    assert!(r["max_coefficient_error"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn unknown_parameter_override_is_rejected() {
    let out = run(&["manifold", "--system", "center-2d", "--set", "q=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    let args = ["dim", "--system", "center-2d", "--max-n", "50000"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["manifold", "--system", "saddle-ex2-template", "--draws", "5", "--seed", "3"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn orbit_dump() {
    let out = run(&["orbit", "--system", "k2", "--max-n", "10"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,x");
    assert_eq!(lines[1], "1,0.5");
    assert_eq!(lines[2], "2,0.25");
    assert_eq!(lines.len(), 11);
}

#[test]
fn catalog_listing() {
    let r = json(&["catalog"]);
    let names: Vec<&str> = r
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    for n in ["node-ex1", "k5", "center-2d", "flow-ks2"] {
        assert!(names.contains(&n));
    }
    let out = run(&["catalog", "--show", "k2"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("x = x - x^2"));
}

#[test]
fn user_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cubic.sys");
    fs::write(
        &path,
        "[system]\nname = cubic\nkind = map\nvariables = u\n[equations]\nu = u - 2*u^3\n[orbit]\ninitial = 0.3\nmax_n = 200000\n",
    )
    .unwrap();
    let r = json(&["dim", "--config", path.to_str().unwrap()]);
    assert!((first_estimate(&r) - 2.0 / 3.0).abs() < 0.05);

    fs::write(&path, "[system]\nname = bad\ncolour = red\n").unwrap();
    let out = run(&["dim", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn too_few_eps_samples_is_rejected() {
    assert_eq!(run(&["dim", "--system", "k2", "--eps-samples", "8"]).status.code(), Some(2));
}
