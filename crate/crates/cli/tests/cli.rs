use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_hartree");

fn run(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(BIN);
    if let Some(c) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, c).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn constants_for_n6_alpha4() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), None, &["constants"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["N"], 6);
    let get = |name: &str| {
        v["constants"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()["value"]
            .as_f64()
            .unwrap()
    };
    let pi = std::f64::consts::PI;
    assert!((get("hls_c") - pi * pi / 6.0 * 60f64.cbrt()).abs() < 1e-12);
    assert!((get("i_half_alpha") - pi.powi(3) / 6.0).abs() < 1e-12);
    assert!((v["two_star_alpha"].as_f64().unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn low_dimension_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), Some(r#"{"problem": {"N": 4, "alpha": 2}}"#), &["constants"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("N >= 5"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let unknown = run(d.path(), Some(r#"{"problem": {"N": 6, "alpha": 4, "beta": 1}}"#), &["constants"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("beta"));
    assert_eq!(run(d.path(), None, &[]).status.code(), Some(2));
    assert_eq!(run(d.path(), None, &["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(run(d.path(), None, &["--threads", "0", "constants"]).status.code(), Some(2));
    let scheme = run(d.path(), Some(r#"{"quadrature": {"tube": {"scheme": "qmc"}}}"#), &["constants"]);
    assert_eq!(scheme.status.code(), Some(2));
}

#[test]
fn print_config_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let first = run(d.path(), Some(r#"{"quadrature": {"tube": {"rel_tol": 0.01}}}"#), &["--print-config", "--seed", "7"]);
    assert_eq!(first.status.code(), Some(0));
    let v = json(&first);
    assert_eq!(v["quadrature"]["seed"], 7);
    // partial overrides keep the remaining preset fields
    assert_eq!(v["quadrature"]["tube"]["nodes"], 1);
    assert_eq!(v["quadrature"]["tube"]["rel_tol"], 0.01);
    assert!(v["potential"]["a"].is_number());
    let second = run(d.path(), Some(std::str::from_utf8(&first.stdout).unwrap()), &["--print-config"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn solve_gates_and_scaling_law() {
    let d = tempfile::tempdir().unwrap();
    let one = run(d.path(), Some(r#"{"solve": {"m": 1}}"#), &["solve"]);
    assert_eq!(one.status.code(), Some(2));
    assert!(stderr(&one).contains("m >= 2"), "{}", stderr(&one));
    let fixed = run(
        d.path(),
        Some(r#"{"solve": {"m": 10, "coefficients": "fixed", "a1": 2.5, "a3": 2.5}}"#),
        &["solve"],
    );
    assert_eq!(fixed.status.code(), Some(0), "{}", stderr(&fixed));
    let v = json(&fixed);
    assert_eq!(v["lambda_m"], 100.0);
    assert_eq!(v["t_m"], 1.0);
    assert_eq!(v["in_window"], true);
    let outside = run(
        d.path(),
        Some(r#"{"solve": {"m": 10, "coefficients": "fixed", "a1": 1.0, "a3": 1e6}}"#),
        &["solve"],
    );
    assert_eq!(outside.status.code(), Some(1));
}

#[test]
fn wrong_bubble_coefficient_fails_invariance() {
    let d = tempfile::tempdir().unwrap();
    let good = run(d.path(), None, &["verify", "--suite", "invariance"]);
    assert_eq!(good.status.code(), Some(0));
    let bad = run(d.path(), Some(r#"{"verify": {"coefficient_factor": 1.1}}"#), &["verify", "--suite", "invariance"]);
    assert_eq!(bad.status.code(), Some(1));
    let text = String::from_utf8(bad.stdout).unwrap();
    assert!(text.starts_with("check_id,expected,actual,tol,pass\n"));
    assert!(text.lines().any(|l| l.starts_with("equation_identity") && l.ends_with(",false")));
}

#[test]
fn synthetic_expansion_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    let o = run(
        d.path(),
        Some(r#"{"expansion": {"m": 2, "synthetic": {"a1": 3.0, "a2": 250.0}}}"#),
        &["--out", out.to_str().unwrap(), "expansion"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let fit: Value = serde_json::from_slice(&std::fs::read(out.join("expansion_fit.json")).unwrap()).unwrap();
    assert!((fit["a1"].as_f64().unwrap() - 3.0).abs() < 1e-8 * 3.0);
    assert!((fit["a2"].as_f64().unwrap() - 250.0).abs() < 1e-8 * 250.0);
    let csv = std::fs::read_to_string(out.join("expansion.csv")).unwrap();
    assert!(csv.starts_with("lambda,dj_dlambda,est_error,omitted_bound,model_prediction,lambda3_dj_dlambda\n"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn stdout_separates_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), Some(r#"{"expansion": {"synthetic": {"a1": 1.0, "a2": 1.0}}}"#), &["expansion"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let (csv, json) = text.split_once("\n\n").unwrap();
    assert!(csv.starts_with("lambda,"));
    let v: Value = serde_json::from_str(json).unwrap();
    assert!(v["a2"].is_null());
    assert!(v["synthetic"]["a2_rel_error"].is_null());
}

#[test]
fn norms_and_lemma_check_run() {
    let d = tempfile::tempdir().unwrap();
    let n = run(d.path(), Some(r#"{"norms": {"samples": 500}}"#), &["norms"]);
    assert_eq!(n.status.code(), Some(0), "{}", stderr(&n));
    let v = json(&n);
    // m = 1: the sampled sup is a lower bound for the exact single-bubble maximum
    let sampled = v["star_ansatz"]["value"].as_f64().unwrap();
    let exact = v["single_bubble_star_sup"][0].as_f64().unwrap();
    assert!(sampled <= exact * (1.0 + 1e-12) && sampled > 0.9 * exact, "{sampled} vs {exact}");
    assert_eq!(v["star_ansatz"]["samples"], 500);
    let l = run(d.path(), None, &["lemma-check"]);
    assert_eq!(l.status.code(), Some(0));
    let text = String::from_utf8(l.stdout).unwrap();
    assert!(text.starts_with("lemma,parameters,budget,ratio_at_budget,worst_ratio,growth,tol,holds,witness\n"));
    assert!(text.lines().skip(1).all(|r| r.contains(",true,")));
}
