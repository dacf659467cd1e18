//! End-to-end tests of the binary: exit codes, report fields, CSV outputs,
//! and byte-identical reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ou-impact"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawning ou-impact")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn value_config() -> &'static str {
    r#"{
        "model": { "mu": 0.5, "s0": 0.0, "delta": 1.0, "horizon": 1.0, "phi0": 0.0 },
        "tol": 1e-10
    }"#
}

#[test]
fn value_reports_a_tight_duality_gap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.json", value_config());
    let out = run(&["value", "--config", &cfg]);
    assert!(out.status.success(), "{:?}", out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["duality_gap"].as_f64().unwrap().abs() <= 1e-8);
    assert_eq!(report["pass"], serde_json::json!(true));
    for field in [
        "V_of_T",
        "integral_V",
        "analytic_value",
        "certainty_equivalent",
        "dual_value",
        "config_digest",
    ] {
        assert!(report.get(field).is_some(), "missing {field}");
    }
    // tiny horizon with mu = s0: value -> -1
    let cfg2 = write(
        dir.path(),
        "v2.json",
        r#"{ "model": { "mu": 1.0, "s0": 1.0, "delta": 1.0, "horizon": 1e-9, "phi0": 0.0 } }"#,
    );
    let out2 = run(&["value", "--config", &cfg2]);
    assert!(out2.status.success());
    let report2: serde_json::Value = serde_json::from_slice(&out2.stdout).unwrap();
    assert!((report2["analytic_value"].as_f64().unwrap() + 1.0).abs() < 1e-9);
}

#[test]
fn malformed_json_exits_1_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{ not json");
    let out_path = dir.path().join("report.json");
    let out = run(&[
        "value",
        "--config",
        &cfg,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_path.exists(), "partial output written");
    assert!(String::from_utf8_lossy(&out.stderr).contains("not valid JSON"));
}

#[test]
fn unknown_and_invalid_fields_exit_1_with_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "unknown.json",
        r#"{ "model": { "mu": 0.0, "s0": 0.0, "delta": 1.0, "horizon": 1.0, "phi0": 0.0 }, "typo": 3 }"#,
    );
    let out = run(&["value", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo"));

    let cfg = write(
        dir.path(),
        "negdelta.json",
        r#"{ "model": { "mu": 0.0, "s0": 0.0, "delta": -1.0, "horizon": 1.0, "phi0": 0.0 } }"#,
    );
    let out = run(&["value", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.delta"));
}

#[test]
fn zero_policy_estimate_is_minus_one_and_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mc.json",
        r#"{
            "model": { "mu": 0.5, "s0": 0.0, "delta": 1.0, "horizon": 1.0, "phi0": 0.0 },
            "n_steps": 50, "n_paths": 200, "seed": 7, "policy": "zero"
        }"#,
    );
    let out1 = dir.path().join("r1.json");
    let out2 = dir.path().join("r2.json");
    let s1 = run(&[
        "montecarlo",
        "--config",
        &cfg,
        "--out",
        out1.to_str().unwrap(),
    ]);
    let s2 = run(&[
        "montecarlo",
        "--config",
        &cfg,
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(s1.status.success() && s2.status.success());
    let b1 = fs::read(&out1).unwrap();
    let b2 = fs::read(&out2).unwrap();
    assert_eq!(b1, b2, "reruns differ");
    let report: serde_json::Value = serde_json::from_slice(&b1).unwrap();
    assert_eq!(report["report"]["estimate"].as_f64().unwrap(), -1.0);
    assert_eq!(report["report"]["std_error"].as_f64().unwrap(), 0.0);
    assert_eq!(report["pass"], serde_json::json!(true));
}

#[test]
fn optimal_small_run_passes_and_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let per_path = dir.path().join("paths.csv");
    let cfg = write(
        dir.path(),
        "mc.json",
        &format!(
            r#"{{
                "model": {{ "mu": 0.5, "s0": 0.0, "delta": 1.0, "horizon": 1.0, "phi0": 0.0 }},
                "n_steps": 200, "n_paths": 2000, "seed": 11,
                "policy": "optimal",
                "per_path_csv": "{}",
                "trace_path_index": 3
            }}"#,
            per_path.to_str().unwrap()
        ),
    );
    let trace = dir.path().join("trace.csv");
    let out = run(&[
        "montecarlo",
        "--config",
        &cfg,
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["analytic_value"].as_f64().is_some());
    assert!(report["abs_error"].as_f64().unwrap() <= report["tolerance"].as_f64().unwrap());

    let paths = fs::read_to_string(&per_path).unwrap();
    let mut lines = paths.lines();
    assert_eq!(lines.next().unwrap(), "path_index,terminal_wealth,utility");
    assert_eq!(paths.lines().count(), 2001);
    assert!(!paths.contains('\r'));

    let trace_body = fs::read_to_string(&trace).unwrap();
    assert_eq!(trace_body.lines().next().unwrap(), "t,S,phi,Phi");
    assert_eq!(trace_body.lines().count(), 202);
}

#[test]
fn seed_override_changes_seed_and_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mc.json",
        r#"{
            "model": { "mu": 0.5, "s0": 0.0, "delta": 1.0, "horizon": 1.0, "phi0": 0.0 },
            "n_steps": 50, "n_paths": 100, "seed": 7, "policy": "zero"
        }"#,
    );
    let a = run(&["montecarlo", "--config", &cfg]);
    let b = run(&["montecarlo", "--config", &cfg, "--seed", "99"]);
    assert!(a.status.success() && b.status.success());
    let ra: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let rb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(ra["seed"].as_u64().unwrap(), 7);
    assert_eq!(rb["seed"].as_u64().unwrap(), 99);
    assert_ne!(ra["config_digest"], rb["config_digest"]);
}

#[test]
fn digest_ignores_whitespace_and_key_order() {
    let dir = tempfile::tempdir().unwrap();
    let c1 = write(dir.path(), "a.json", value_config());
    let c2 = write(
        dir.path(),
        "b.json",
        r#"{"tol":1e-10,"model":{"phi0":0.0,"horizon":1.0,"delta":1.0,"s0":0.0,"mu":0.5}}"#,
    );
    let r1: serde_json::Value =
        serde_json::from_slice(&run(&["value", "--config", &c1]).stdout).unwrap();
    let r2: serde_json::Value =
        serde_json::from_slice(&run(&["value", "--config", &c2]).stdout).unwrap();
    assert_eq!(r1["config_digest"], r2["config_digest"]);
}

#[test]
fn oracles_default_grid_passes_and_degenerate_n_fails_gracefully() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.json", r#"{ "n": 4000 }"#);
    let out = run(&["oracles", "--config", &cfg]);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], serde_json::json!(true));
    assert_eq!(report["endpoint"].as_array().unwrap().len(), 18);
    assert_eq!(report["coupled"].as_array().unwrap().len(), 36);

    // n = 2: runs without crashing, errors are large but finite, pass false,
    // exit code 2 (numerical-acceptance failure)
    let cfg2 = write(dir.path(), "o2.json", r#"{ "n": 2 }"#);
    let out2 = run(&["oracles", "--config", &cfg2]);
    assert_eq!(out2.status.code(), Some(2));
    let report2: serde_json::Value = serde_json::from_slice(&out2.stdout).unwrap();
    assert_eq!(report2["pass"], serde_json::json!(false));
    for row in report2["endpoint"].as_array().unwrap() {
        assert!(row["discrete_objective"].as_f64().unwrap().is_finite());
    }
}

#[test]
fn limits_reports_both_rate_limits_and_frictionless_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "l.json",
        r#"{
            "asymptotics": { "delta": 1.0, "horizon": 100.0 },
            "frictionless": {
                "mu": 10.0, "s0": 0.0, "horizon": 1.0, "n_steps": 4000,
                "seed": 4242, "deltas": [1e3, 1e4]
            }
        }"#,
    );
    let out = run(&["limits", "--config", &cfg]);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let asy = &report["asymptotics"];
    let rate = asy["certainty_equivalent_rate"].as_f64().unwrap();
    assert!((rate - asy["formula_limit"].as_f64().unwrap()).abs() < 2e-2);
    // the prose rate differs by a factor of two; both are emitted
    assert!(
        (asy["prose_limit"].as_f64().unwrap() - 2.0 * asy["formula_limit"].as_f64().unwrap()).abs()
            < 1e-12
    );
    assert!(asy["v_residual_at_t_large"].as_f64().unwrap() < 1e-6);
    assert_eq!(report["frictionless"].as_array().unwrap().len(), 2);
    assert_eq!(report["monotone_in_depth"], serde_json::json!(true));
    assert_eq!(report["pass"], serde_json::json!(true));
}
