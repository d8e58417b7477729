use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsecut"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const P3: &str =
    r#"{"n":3,"cap_edges":[{"u":0,"v":1,"w":"1"},{"u":1,"v":2,"w":"1"}],"dem_edges":[{"u":0,"v":2,"w":"1"}]}"#;

fn generated(dir: &Path, n: &str, seed: &str, extra: &[&str]) -> (PathBuf, PathBuf) {
    let inst = dir.join(format!("inst-{n}-{seed}.json"));
    let dec = dir.join(format!("dec-{n}-{seed}.json"));
    let mut args = vec!["gen", "--n", n, "--k", "2", "--seed", seed, "--decomposition-out", dec.to_str().unwrap()];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", inst.to_str().unwrap()]);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (inst, dec)
}

#[test]
fn oracle_on_path_of_three() {
    let dir = tempfile::tempdir().unwrap();
    let p3 = write(dir.path(), "p3.json", P3);
    let v = json_stdout(&run(&["oracle", "--instance", p3.to_str().unwrap()]));
    assert_eq!(v["phi"], "1");
}

#[test]
fn zero_lambda_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (_, dec) = generated(dir.path(), "8", "1", &[]);
    let out = run(&["transform", "--decomposition", dec.to_str().unwrap(), "--mode", "highways", "--lambda", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mismatched_shape_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (_, dec) = generated(dir.path(), "8", "1", &[]);
    let d = dec.to_str().unwrap();
    for args in [
        vec!["transform", "--decomposition", d, "--mode", "bridges", "--q", "2"],
        vec!["transform", "--decomposition", d, "--mode", "superhighways", "--lambda", "2"],
        vec!["transform", "--decomposition", d, "--lambda", "2"],
        vec!["transform", "--decomposition", d],
        vec!["solve", "--instance", d, "--mode", "nowhere"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn domain_errors_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"n":2,"cap_edges":[],"dem_edges":[]}"#);
    let out = run(&["oracle", "--instance", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert_eq!(err["error"], "InvalidInstance");
    assert!(err["message"].is_string());

    let out = run(&["diameter", "--decomposition", "/does/not/exist.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn transform_reports_stats_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (_, dec) = generated(dir.path(), "14", "5", &[]);
    let v = json_stdout(&run(&[
        "transform",
        "--decomposition",
        dec.to_str().unwrap(),
        "--mode",
        "highways",
        "--lambda",
        "2",
    ]));
    assert_eq!(v["stats"]["certified_diameter"], 3);
    assert!(v["stats"]["width"].is_u64() && v["stats"]["depth"].is_u64());
    let out = write(dir.path(), "t.json", &v.to_string());
    let d = json_stdout(&run(&["diameter", "--decomposition", out.to_str().unwrap(), "--method", "exact"]));
    assert!(d["diameter"].as_u64().unwrap() <= 3);
    assert_eq!(d["method"], "exact");
    assert_eq!(d["witness"].as_array().unwrap().len(), 2);
}

#[test]
fn solve_is_deterministic_and_matches_oracle_on_bag_local_demands() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, dec) = generated(dir.path(), "10", "7", &["--bag-local"]);
    let args = ["solve", "--instance", inst.to_str().unwrap(), "--decomposition", dec.to_str().unwrap(), "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json_stdout(&a);
    for key in ["alpha", "cut", "sparsity", "oracle_sparsity", "diameter_used"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v.as_object().unwrap().len(), 5);
    let oracle = json_stdout(&run(&["oracle", "--instance", inst.to_str().unwrap()]));
    assert_eq!(v["sparsity"], oracle["phi"]);
    assert_eq!(v["oracle_sparsity"], oracle["phi"]);
}

#[test]
fn solve_writes_lp_dump_and_skips_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = generated(dir.path(), "9", "2", &[]);
    let dump = dir.path().join("lp.json");
    let v = json_stdout(&run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--mode",
        "bridges",
        "--lambda",
        "2",
        "--trials",
        "40",
        "--no-oracle",
        "--lp-dump",
        dump.to_str().unwrap(),
    ]));
    assert!(v["oracle_sparsity"].is_null());
    let lp: Value = serde_json::from_str(&std::fs::read_to_string(dump).unwrap()).unwrap();
    let rows = lp["num_rows"].as_u64().unwrap();
    assert_eq!(lp["rhs"].as_array().unwrap().len() as u64, rows);
    assert!(lp["entries"].as_array().unwrap().iter().all(|e| e[0].as_u64().unwrap() < rows));
}

#[test]
fn diagnose_reports_every_pair() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = generated(dir.path(), "10", "4", &["--demands", "3"]);
    let v = json_stdout(&run(&["diagnose", "--instance", inst.to_str().unwrap()]));
    let pairs = v["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 3);
    for p in pairs {
        assert_eq!(p["checks"]["phi_non_increasing"], true);
        assert!(p["checks"]["layer_sizes"].is_array());
    }
}

#[test]
fn bench_emits_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "bench.json",
        r#"[{"n": 10, "k": 2, "mode": "superhighways", "q": 2, "seeds": [1, 2]}, {"n": 30, "k": 3, "seeds": [9]}]"#,
    );
    let out = run(&["bench", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "id,n,k,mode,lambda,q,seed,width_before,width_after,depth,certified_diameter,measured_diameter,alpha,rounded_sparsity,phi,max_fitted_c"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == 16));
    assert_eq!(rows[0][10], "5");
    assert!(rows[2][12].is_empty(), "large rows skip solving by default");

    let timed = run(&["bench", "--spec", spec.to_str().unwrap(), "--timings"]);
    assert!(String::from_utf8(timed.stdout).unwrap().lines().next().unwrap().ends_with(",wall_ms"));
}
