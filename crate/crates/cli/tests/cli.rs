use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ncdirichlet::elliptic::weak_residual_linear;
use ncdirichlet::{DirichletSpace, Element};
use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncdirichlet"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .args(extra)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn corpus_runs_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let mut count = 0;
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")).unwrap() {
        let path = entry.unwrap().path();
        let out = tmp.path().join(path.file_stem().unwrap());
        let output = run(&path, &out, &[]);
        assert_eq!(output.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&output.stderr));
        let rep = report(&out);
        assert_eq!(rep["passed"], Value::Bool(true), "{}", path.display());
        count += 1;
    }
    assert!(count >= 10);
}

#[test]
fn gap_on_torus_is_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&corpus("torus_gap.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let results = &report(tmp.path())["results"];
    assert_eq!(results, &serde_json::json!({ "gap": 1.0, "C_P": 1.0, "kernel_dim": 1 }));
}

#[test]
fn describe_qubit_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    run(&corpus("qubit_describe.json"), tmp.path(), &[]);
    let results = &report(tmp.path())["results"];
    let spectrum: Vec<f64> = serde_json::from_value(results["spectrum"].clone()).unwrap();
    assert_eq!(spectrum, vec![0.0, 0.0, 4.0, 4.0]);
    assert_eq!(results["dim"], 4);
    assert_eq!(results["generators"].as_array().unwrap().len(), 1);
}

#[test]
fn report_keys_are_sorted_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(&corpus("z4_calculus.json"), &a, &[]);
    run(&corpus("z4_calculus.json"), &b, &[]);
    let text_a = fs::read_to_string(a.join("report.json")).unwrap();
    assert_eq!(text_a, fs::read_to_string(b.join("report.json")).unwrap());
    // Value maps are key-ordered, so an identical re-serialization means the file is sorted
    let v: Value = serde_json::from_str(&text_a).unwrap();
    let reserialized = serde_json::to_string_pretty(&v).unwrap() + "\n";
    assert_eq!(reserialized, text_a);
}

#[test]
fn seed_override_changes_battery() {
    let tmp = tempfile::tempdir().unwrap();
    run(&corpus("z4_calculus.json"), &tmp.path().join("a"), &[]);
    run(&corpus("z4_calculus.json"), &tmp.path().join("b"), &["--seed", "99"]);
    let a = report(&tmp.path().join("a"));
    let b = report(&tmp.path().join("b"));
    assert_eq!(b["seed"], 99);
    assert_ne!(a["checks"][1]["value"], b["checks"][1]["value"]);
}

#[test]
fn malformed_config_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for bad in [
        "{ not json",
        r#"{"command": "gap", "backend": {"kind": "NCTorus", "N": 2, "theta": 0.3}, "extra": 1}"#,
        r#"{"command": "gap", "backend": {"kind": "NCTorus", "N": 2, "theta": 0.3, "phase": 1}}"#,
        r#"{"command": "warp", "backend": {"kind": "NCTorus", "N": 2, "theta": 0.3}}"#,
        r#"{"command": "gap", "backend": {"kind": "NCTorus", "N": 2, "theta": 0.3}, "problem": {"samples": 3}}"#,
        r#"{"command": "solve-poisson", "backend": {"kind": "CyclicGroup", "q": 3, "lengths": [0, 1, 1]}}"#,
        r#"{"command": "gap", "backend": {"kind": "CyclicGroup", "q": 4, "lengths": [0, 1, 4, 1]}}"#,
    ] {
        let config = write_config(tmp.path(), bad);
        let result = run(&config, &out, &[]);
        assert_eq!(result.status.code(), Some(1), "{bad}");
        assert!(!out.exists(), "{bad}");
    }
}

#[test]
fn missing_config_file_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let result = run(&tmp.path().join("absent.json"), &tmp.path().join("out"), &[]);
    assert_eq!(result.status.code(), Some(1));
    let usage = Command::new(env!("CARGO_BIN_EXE_ncdirichlet")).arg("--bogus").output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
}

#[test]
fn failed_check_exits_two_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"command": "be-check",
            "backend": {"kind": "MatrixAlgebra", "n": 2, "generators": [[[1,0],[0,0],[0,0],[-1,0]]]},
            "problem": {"k": 10.0}}"#,
    );
    let out = tmp.path().join("out");
    let result = run(&config, &out, &[]);
    assert_eq!(result.status.code(), Some(2));
    let rep = report(&out);
    assert_eq!(rep["passed"], Value::Bool(false));
    let sup = rep["results"]["k_supremum"].as_f64().unwrap();
    assert!((sup - 4.0).abs() < 1e-6, "{sup}");
}

#[test]
fn probe_failure_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"command": "solve-quasilinear",
            "backend": {"kind": "NCTorus", "N": 1, "theta": 0.3},
            "problem": {"f": {"terms": [{"at": [1, 0], "c": [1, 0]}]}, "map": {"kind": "linear", "scale": -1.0}}}"#,
    );
    let out = tmp.path().join("out");
    assert_eq!(run(&config, &out, &[]).status.code(), Some(2));
    assert!(!out.join("solution.json").exists());
}

#[test]
fn kernel_rhs_is_an_error_unless_projected() {
    let tmp = tempfile::tempdir().unwrap();
    let text = |project: bool| {
        format!(
            r#"{{"command": "solve-poisson", "backend": {{"kind": "CyclicGroup", "q": 4, "lengths": [0, 1, 2, 1]}},
                "problem": {{"f": [[1, 0], [1, 0], [0, 0], [0, 0]], "project_rhs": {project}}}}}"#
        )
    };
    let out = tmp.path().join("out");
    assert_eq!(run(&write_config(tmp.path(), &text(false)), &out, &[]).status.code(), Some(1));
    assert_eq!(run(&write_config(tmp.path(), &text(true)), &out, &[]).status.code(), Some(0));
    let flags = report(&out)["results"]["flags"].clone();
    assert!(flags[0].as_str().unwrap().starts_with("projected_rhs"));
}

#[test]
fn solution_json_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let config = corpus("z4_poisson.json");
    assert_eq!(run(&config, tmp.path(), &[]).status.code(), Some(0));
    let u: Element = serde_json::from_str(&fs::read_to_string(tmp.path().join("solution.json")).unwrap()).unwrap();
    let cfg: Value = serde_json::from_str(&fs::read_to_string(&config).unwrap()).unwrap();
    let f: Vec<ncdirichlet::linalg::C64> = serde_json::from_value(cfg["problem"]["f"].clone()).unwrap();
    let space = DirichletSpace::new(u.algebra().clone());
    let f = u.algebra().element(ncdirichlet::linalg::CVector::from_vec(f)).unwrap();
    let residual = weak_residual_linear(&space, &u, &f).unwrap();
    let reported = report(tmp.path())["results"]["residual_weak"].as_f64().unwrap();
    assert_eq!(residual, reported);
    let csv = fs::read_to_string(tmp.path().join("solution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn evolve_writes_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&corpus("torus_continuity.json"), tmp.path(), &[]).status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 101);
    let rep = report(tmp.path());
    assert!(rep["results"]["conservation_drift"].as_f64().unwrap() <= 1e-10);
    assert_eq!(rep["results"]["steps"].as_array().unwrap().len(), 100);
}

#[test]
fn tol_override_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    run(&corpus("z4_poisson.json"), tmp.path(), &["--tol", "1e-6"]);
    assert_eq!(report(tmp.path())["tol"], 1e-6);
    let bad = run(&corpus("z4_poisson.json"), &tmp.path().join("x"), &["--tol", "-1"]);
    assert_eq!(bad.status.code(), Some(1));
}
