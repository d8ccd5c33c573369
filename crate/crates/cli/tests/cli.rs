use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn covlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covlp")).args(args).env_remove("COVLP_MAX_CALLS").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad report: {e}\n{}", String::from_utf8_lossy(&out.stdout)))
}

fn objective(v: &Value) -> f64 {
    v["outcome"]["objective"].as_f64().unwrap()
}

#[test]
fn identity_lp_eps_one() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "id.json", r#"{"A": [[1]], "b": [1], "c": [1]}"#);
    let out = covlp(&["covlp-solve", f.to_str().unwrap(), "--eps", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let obj = objective(&json(&out));
    assert!((1.0..=3.0).contains(&obj), "{obj}");
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.json", r#"{"A": [[1]"#);
    assert_eq!(covlp(&["covlp-solve", f.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(covlp(&["verify", f.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn zero_in_b_is_rejected() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "b0.json", r#"{"A": [[1, 2], [3, 4]], "b": [1, 0], "c": [1, 1]}"#);
    let out = covlp(&["covlp-solve", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b > 0"));
}

#[test]
fn two_halves_fit_one_bin() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "half.json", r#"{"items": [0.5, 0.5]}"#);
    let out = covlp(&["binpack-solve", f.to_str().unwrap(), "--eps", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let obj = objective(&v);
    assert!((1.0..=3.0).contains(&obj), "{obj}");
    // Solution entries are count vectors.
    assert!(v["outcome"]["solution"][0]["column"].is_array());
    assert_eq!(v["bounds"]["m_worst_case"], Value::Bool(true));
}

#[test]
fn singleton_forced_items_verify_under_every_oracle() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "two.json", r#"{"items": [0.6, 0.7]}"#);
    for oracle in ["exact", "greedy", "singleton"] {
        let out = covlp(&["verify", f.to_str().unwrap(), "--oracle", oracle]);
        assert_eq!(out.status.code(), Some(0), "{oracle}");
        let v = json(&out);
        assert_eq!(v["verification"]["r_star_exact"], "2");
        assert!(objective(&v) >= 2.0 * (1.0 - 1e-9));
    }
}

#[test]
fn empty_item_list_is_rejected() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "empty.json", r#"{"items": []}"#);
    assert_eq!(covlp(&["binpack-solve", f.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn exact_oracle_cap_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "many.json", r#"{"sizes": [0.1], "multiplicities": [41]}"#);
    assert_eq!(covlp(&["binpack-solve", f.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(covlp(&["binpack-solve", f.to_str().unwrap(), "--oracle", "greedy"]).status.code(), Some(0));
}

#[test]
fn trivial_lp_passes_with_counters_within_bounds() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "id.json", r#"{"A": [[1]], "b": [1], "c": [1]}"#);
    let out = covlp(&["verify", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verification"]["verdict"], "PASS");
    for (_, ok) in v["checks"].as_object().unwrap() {
        assert_eq!(ok, &Value::Bool(true));
    }
    assert!(v["counters"]["index_find_calls"].as_f64().unwrap() <= v["bounds"]["total_calls"].as_f64().unwrap());
}

#[test]
fn lying_eta_fails_verification() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "lie.json", r#"{"A": [[1, 0.3]], "b": [1], "c": [1, 1]}"#);
    let path = f.to_str().unwrap();
    // Honest declaration passes.
    assert_eq!(covlp(&["verify", path, "--eta-mode", "degrade:0.3"]).status.code(), Some(0));
    let out = covlp(&["verify", path, "--eta-mode", "degrade:0.3", "--claim-eta", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["verification"]["verdict"], "FAIL");
}

#[test]
fn reports_are_deterministic_except_wall_time() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "lp.json", r#"{"A": [[1, "1/2", 2], [0.25, 3, 1]], "b": [1, 2], "c": [1, 1.5, 2]}"#);
    let run = || {
        let out = covlp(&["verify", f.to_str().unwrap(), "--eps", "0.5"]);
        assert_eq!(out.status.code(), Some(0));
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("\"wall_time_secs\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(run(), run());
}

#[test]
fn max_calls_from_environment() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "lp.json", r#"{"A": [[1, 2], [2, 1]], "b": [1, 1], "c": [1, 1]}"#);
    let path = f.to_str().unwrap();
    let run = |cap: &str| {
        Command::new(env!("CARGO_BIN_EXE_covlp")).args(["covlp-solve", path]).env("COVLP_MAX_CALLS", cap).output().unwrap()
    };
    let out = run("123456");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["params"]["max_calls"], 123456);
    // Too small a cap aborts the solve.
    assert_eq!(run("2").status.code(), Some(1));
}

#[test]
fn bench_emits_csv() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "half.json", r#"{"items": [0.5, 0.5]}"#);
    let b = write(&dir, "id.json", r#"{"A": [[1]], "b": [1], "c": [1]}"#);
    let out = covlp(&["bench", a.to_str().unwrap(), b.to_str().unwrap(), "--eps", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "instance,eps,eta,objective,r_star,ratio,pointfind_calls,U,M");
    // Three oracles for the bin-packing file, one index mode for the LP.
    assert_eq!(lines.len(), 1 + 3 + 1);
    assert!(lines[1].starts_with("half.json,"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(covlp(&["covlp-solve"]).status.code(), Some(1));
    assert_eq!(covlp(&["binpack-solve", "x.json", "--oracle", "psychic"]).status.code(), Some(1));
    assert_eq!(covlp(&["--help"]).status.code(), Some(0));
}
