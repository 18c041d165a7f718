use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BANANA: &str = r#"{"vertices":["a","b"],"edges":[{"head":"a","tail":"b","n":0},{"head":"a","tail":"b","n":0}]}"#;
const TRIANGLE: &str = r#"{"vertices":["a","b","c"],"edges":[{"head":"a","tail":"b","n":0},{"head":"b","tail":"c","n":0},{"head":"c","tail":"a","n":0}]}"#;
const LOOP0: &str = r#"{"vertices":["v"],"edges":[{"head":"v","tail":"v","n":0}]}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn ellint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellint")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_banana_json() {
    let d = tempfile::tempdir().unwrap();
    let g = write(d.path(), "banana2.json", BANANA);
    let out = ellint(&["eval", "--graph", path(&g), "--tau", "0.2+1.1i"]);
    let v = json(&out);
    assert!((v["value"]["re"].as_f64().unwrap() - 0.0724561).abs() < 1e-6);
    assert!((v["value"]["im"].as_f64().unwrap() - 0.0160608).abs() < 1e-6);
    assert!(v["err"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["method"], "regulated-extrapolated");
    assert_eq!(v["params"]["L"], 1000.0);
    assert_eq!(v["run"]["tau"]["im"], 1.1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"eps_schedule\""));
}

#[test]
fn eval_excised_matches_regulated() {
    let d = tempfile::tempdir().unwrap();
    let g = write(d.path(), "b.json", BANANA);
    let a = json(&ellint(&["eval", "--graph", path(&g), "--tau", "i"]));
    let b = json(&ellint(&["eval", "--graph", path(&g), "--tau", "i", "--method", "excised", "--excision", "0.15"]));
    assert_eq!(b["method"], "excised-direct");
    assert_eq!(b["params"]["excision_radius"], 0.15);
    let diff = (a["value"]["re"].as_f64().unwrap() - b["value"]["re"].as_f64().unwrap()).abs();
    assert!(diff < 1e-9);
}

#[test]
fn output_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let g = write(d.path(), "t.json", TRIANGLE);
    let args = ["eval", "--graph", path(&g), "--tau", "0.1+0.9i", "--eps-schedule", "8e-3,4e-3,2e-3"];
    let a = ellint(&args);
    let b = ellint(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_count_does_not_change_output() {
    let d = tempfile::tempdir().unwrap();
    let g = write(d.path(), "t.json", TRIANGLE);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_ellint"))
            .env("ELLINT_THREADS", threads)
            .args(["eval", "--graph", path(&g), "--tau", "i", "--format", "csv"])
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn scan_csv_rows() {
    let d = tempfile::tempdir().unwrap();
    let g = write(d.path(), "loop.json", LOOP0);
    let out = ellint(&["scan", "--graph", path(&g), "--re", "0", "--im", "0.8:2.0:25", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,re,im,err");
    assert_eq!(lines.len(), 26);
    // (pi/12) E_2^*(i) = 0
    let row = lines.iter().find(|l| l.split(',').nth(1) == Some("1.1")).unwrap();
    assert!(row.starts_with("0,"));
    let at_one: Vec<&str> = lines[5].split(',').collect();
    assert_eq!(at_one[1], "1");
    assert!(at_one[2].parse::<f64>().unwrap().abs() < 1e-10);
}

#[test]
fn output_file_and_csv_header() {
    let d = tempfile::tempdir().unwrap();
    let g = write(d.path(), "b.json", BANANA);
    let o = d.path().join("out.csv");
    let out = ellint(&[
        "check-modularity", "--graph", path(&g), "--tau", "0.2+1.1i", "--gamma", "1,1,0,1", "--format", "csv",
        "--output", path(&o),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&o).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("residual,err,weight"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(row[0].parse::<f64>().unwrap() < 1e-10);
    assert_eq!(row[2], "4");
}

#[test]
fn anomaly_json_fields() {
    let d = tempfile::tempdir().unwrap();
    let g = write(d.path(), "t.json", TRIANGLE);
    let v = json(&ellint(&["check-anomaly", "--graph", path(&g), "--tau", "i", "--h", "1e-3"]));
    for k in ["lhs", "rhs", "residual"] {
        assert!(!v[k].is_null(), "{k}");
    }
    assert_eq!(v["run"]["h"], 1e-3);
}

#[test]
fn polys_and_constants() {
    let d = tempfile::tempdir().unwrap();
    let g = write(d.path(), "t.json", TRIANGLE);
    let v = json(&ellint(&["polys", "--graph", path(&g), "--t", "1,2,3"]));
    // conductances 1/t: 1/2 + 1/3 + 1/6
    assert!((v["det"].as_f64().unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(v["trees"].as_array().unwrap().len(), 3);
    assert_eq!(v["cuts"].as_array().unwrap().len(), 2);
    let v = json(&ellint(&["a-const", "--n0", "0", "--ns", "0"]));
    assert_eq!(v["value"], "1/12");
    let v = json(&ellint(&["selfloop", "--n", "1", "--tau", "0.3+0.8i"]));
    assert_eq!(v["value"]["re"], 0.0);
}

#[test]
fn graph_round_trip_is_stable() {
    let d = tempfile::tempdir().unwrap();
    let g = write(d.path(), "t.json", TRIANGLE);
    let parsed = ellint::graph::DecoratedGraph::from_json(&std::fs::read_to_string(&g).unwrap()).unwrap();
    let a: Value = serde_json::from_str(&parsed.to_json()).unwrap();
    let b: Value = serde_json::from_str(TRIANGLE).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let neg = write(d.path(), "neg.json", r#"{"vertices":["a","b"],"edges":[{"head":"a","tail":"b","n":-1}]}"#);
    let out = ellint(&["eval", "--graph", path(&neg), "--tau", "i"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("edges[0].n"));
    let missing = write(d.path(), "m.json", r#"{"vertices":["a"],"edges":[{"head":"a","tail":"q","n":0}]}"#);
    let out = ellint(&["eval", "--graph", path(&missing), "--tau", "i"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`q`"));
    let g = write(d.path(), "b.json", BANANA);
    assert_eq!(ellint(&["eval", "--graph", path(&g), "--tau", "0.2-1i"]).status.code(), Some(2));
    assert_eq!(ellint(&["eval", "--graph", path(&g), "--tau", "i", "--eps-schedule", "1e-3,2e-3"]).status.code(), Some(2));
    let bad = ellint(&["check-modularity", "--graph", path(&g), "--tau", "i", "--gamma", "1,1,1,1"]);
    assert_eq!(bad.status.code(), Some(2));
    let c5 = r#"{"vertices":["a","b","c","d","e"],"edges":[{"head":"a","tail":"b","n":0},{"head":"b","tail":"c","n":0},{"head":"c","tail":"d","n":0},{"head":"d","tail":"e","n":0},{"head":"e","tail":"a","n":0}]}"#;
    let big = write(d.path(), "c5.json", c5);
    assert_eq!(ellint(&["eval", "--graph", path(&big), "--tau", "i"]).status.code(), Some(3));
    let tri = write(d.path(), "t.json", TRIANGLE);
    let ex = ellint(&["eval", "--graph", path(&tri), "--tau", "i", "--method", "excised"]);
    assert_eq!(ex.status.code(), Some(3));
}
