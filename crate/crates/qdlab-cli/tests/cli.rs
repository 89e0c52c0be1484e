use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdlab")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut a = vec!["--json"];
    a.extend_from_slice(args);
    let text = stdout(&a);
    let v: Value = serde_json::from_str(&text).unwrap();
    // keys come out sorted, so reprinting gives the same bytes
    assert_eq!(serde_json::to_string_pretty(&v).unwrap(), text.trim_end());
    v
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frob"]).status.code(), Some(2));
    assert_eq!(run(&["anyons"]).status.code(), Some(2));
    assert_eq!(run(&["gate", "sideways"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1() {
    for args in [
        vec!["anyons", "q7"],
        vec!["boundary", "s3", "--subgroup", "bogus"],
        vec!["msolve", "builtin:ds3", "--boundary", "A+B"],
        vec!["gate", "loop", "--mtc", "builtin:nope", "--boundary", "1+e", "--anyon", "e"],
        vec!["lattice", "gsd", "--preset", "nope"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{:?}", args);
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    }
    let a = vec!["--json", "boundary", "s3", "--subgroup", "bogus"];
    let out = run(&a);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["error"].as_str().unwrap().contains("bogus"));
}

#[test]
fn anyons_table_and_json() {
    let text = stdout(&["anyons", "s3"]);
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 8);
    let v = json(&["anyons", "s3"]);
    assert_eq!(v["count"], 8);
    let dims: Vec<f64> = v["anyons"].as_array().unwrap().iter().map(|a| a["dim"].as_f64().unwrap()).collect();
    assert_eq!(dims.iter().sum::<f64>(), 16.0);
}

#[test]
fn lagrangian_dz3() {
    let v = json(&["lagrangian", "builtin:dz3"]);
    assert_eq!(v["algebras"], serde_json::json!(["1+e+e2", "1+m+m2"]));
    assert!(stdout(&["lagrangian", "builtin:dz3"]).contains("2 Lagrangian algebras"));
}

#[test]
fn loop_b_on_a_c_d_hole() {
    let v = json(&["gate", "loop", "--mtc", "builtin:ds3", "--boundary", "A+C+D", "--anyon", "B"]);
    let m = v["matrix"].as_array().unwrap();
    assert_eq!(m.len(), 3);
    for (i, row) in m.iter().enumerate() {
        for (j, z) in row.as_array().unwrap().iter().enumerate() {
            let want = if i != j { 0.0 } else if i == 2 { -1.0 } else { 1.0 };
            assert_eq!(z[0].as_f64().unwrap(), want);
            assert_eq!(z[1].as_f64().unwrap(), 0.0);
        }
    }
}

#[test]
fn group_double_and_builtin_agree() {
    let a = json(&["modular", "z2"]);
    let b = json(&["modular", "builtin:tc"]);
    assert_eq!(a["S"], b["S"]);
}

#[test]
fn lattice_presets() {
    let v = json(&["lattice", "gsd", "--preset", "z2-two-holes"]);
    assert_eq!(v["gsd"], 2);
    let v = json(&["lattice", "check", "--preset", "z2-bulk", "--trials", "2"]);
    assert!(v["commuting"]["max_residual"].as_f64().unwrap() < 1e-10);
}
