use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tndg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tndg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const E1_CUBED: &str = r#"{"order":3,"dims":[2,2,2],"symmetric":true,"entries":[1,0,0,0,0,0,0,0]}"#;
const DIAG11: &str = r#"{"order":3,"dims":[2,2,2],"symmetric":true,"entries":[1,0,0,0,0,0,0,1]}"#;

#[test]
fn solve_z_on_e1_cubed() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "a.json", E1_CUBED);
    let out = tndg(&["solve", "z", "--in", p(&input)]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["config"]["command"], "solve z");
    assert!(report["version"].as_str().unwrap().starts_with("tndg "));
    let pairs = report["result"]["pairs"].as_array().unwrap();
    let top = pairs
        .iter()
        .find(|q| (q["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-12)
        .expect("(1, e1)");
    assert!((top["x"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(top["certification"]["nondegenerate"], true);
}

#[test]
fn solve_h_on_diag11() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "a.json", DIAG11);
    let out = tndg(&["solve", "h", "--in", p(&input)]);
    assert_eq!(out.status.code(), Some(0));
    let pairs = json(&out)["result"]["pairs"].as_array().unwrap().clone();
    assert_eq!(pairs.len(), 4);
    for q in pairs {
        assert!((q["lambda"][0].as_f64().unwrap() - 1.0).abs() < 1e-8);
        assert!(q["lambda"][1].as_f64().unwrap().abs() < 1e-8);
    }
}

#[test]
fn solve_svt_reports_tuples() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "a.json",
        r#"{"order":3,"dims":[2,3,2],"symmetric":false,"entries":[0.3,-1.2,0.5,0.8,-0.1,1.1,0.9,0.2,-0.7,0.4,1.3,-0.6]}"#,
    );
    let out_path = dir.path().join("out.json");
    let out = tndg(&[
        "solve",
        "svt",
        "--in",
        p(&input),
        "--out",
        p(&out_path),
        "--starts",
        "40",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let tuples = read_json(&out_path)["result"]["tuples"]
        .as_array()
        .unwrap()
        .clone();
    assert!(!tuples.is_empty());
    for t in tuples {
        assert_eq!(t["blocks"].as_array().unwrap().len(), 3);
        assert_eq!(t["certification"]["route"], "hessian");
    }
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (
            r#"{"order":3,"dims":[2,3,2],"symmetric":false,"entries":[1,0,0,0,0,0,0,0,0,0,0,0]}"#,
            "dims",
        ),
        (
            r#"{"order":3,"dims":[2,2,2],"symmetric":true,"entries":[1,0,0]}"#,
            "entries",
        ),
        (
            r#"{"order":3,"dims":[1,1,1],"symmetric":false,"entries":[1e999]}"#,
            "JSON",
        ),
        (r#"{"order":3,"dims":[2,2,2]"#, "JSON"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let input = write(&dir, &format!("bad{i}.json"), text);
        let out = tndg(&["solve", "z", "--in", p(&input)]);
        assert_eq!(out.status.code(), Some(2), "case {i}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "case {i}: {err}");
    }
    let missing = tndg(&["solve", "z", "--in", "/nonexistent/tensor.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let h3 = write(
        &dir,
        "n3.json",
        &format!(
            r#"{{"order":3,"dims":[3,3,3],"symmetric":false,"entries":[{}]}}"#,
            vec!["0.5"; 27].join(",")
        ),
    );
    assert_eq!(tndg(&["solve", "h", "--in", p(&h3)]).status.code(), Some(2));
}

#[test]
fn odeco_enumerate_diag11_spec() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        r#"{"n":2,"r":2,"k":3,"U":[[1,0],[0,1]],"lambdas":[1,1]}"#,
    );
    let out = tndg(&["odeco", "enumerate", "--in", p(&spec)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["pairs"].as_array().unwrap().len(), 6);
    let bad = write(
        &dir,
        "bad.json",
        r#"{"n":2,"r":2,"k":3,"U":[[1,0],[1,0]],"lambdas":[1,1]}"#,
    );
    assert_eq!(
        tndg(&["odeco", "enumerate", "--in", p(&bad)]).status.code(),
        Some(2)
    );
}

#[test]
fn odeco_certify_random_spec() {
    let out = tndg(&[
        "odeco", "certify", "--n", "4", "--r", "3", "--k", "4", "--seed", "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let result = &json(&out)["result"];
    assert_eq!(result["degenerate"], 0);
    assert!(result["pairs"].as_u64().unwrap() > 0);
}

#[test]
fn odeco_build_then_solve_finds_enumerated_lines() {
    let dir = TempDir::new().unwrap();
    let tensor = dir.path().join("t.json");
    let base = ["--n", "3", "--k", "3", "--seed", "11"];
    let build = tndg(&[&["odeco", "build", "--out", p(&tensor)][..], &base[..]].concat());
    assert_eq!(build.status.code(), Some(0));
    let listed = json(&tndg(&[&["odeco", "enumerate"][..], &base[..]].concat()));
    let solved = json(&tndg(&["solve", "z", "--in", p(&tensor)]));
    let lines: Vec<Vec<f64>> = listed["result"]["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|q| serde_json::from_value(q["pair"]["x"].clone()).unwrap())
        .collect();
    for q in solved["result"]["pairs"].as_array().unwrap() {
        if q["lambda"].as_f64().unwrap().abs() < 1e-8 {
            continue;
        }
        let x: Vec<f64> = serde_json::from_value(q["x"].clone()).unwrap();
        let hit = lines.iter().any(|l| {
            let d: f64 = l.iter().zip(&x).map(|(a, b)| a * b).sum();
            (d.abs() - 1.0).abs() < 1e-9
        });
        assert!(hit, "solved line {x:?} not enumerated");
    }
}

#[test]
fn census_z_is_clean_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("results");
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_tndg"))
            .args([
                "census", "--kind", "z", "--n", "2", "--k", "3", "--trials", "200", "--seed", "7",
            ])
            .args(["--out", p(&out_dir)])
            .env("TNDG_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        fs::read(out_dir.join("census.json")).unwrap()
    };
    let first = run("4");
    let second = run("4");
    let single = run("1");
    assert_eq!(first, second);
    assert_eq!(first, single);
    let report: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["result"]["degenerate_fraction"], 0.0);
    assert_eq!(report["config"]["trials"], 200);
}

#[test]
fn census_h_counts_six_for_quartics() {
    let out = tndg(&[
        "census", "--kind", "h", "--k", "4", "--trials", "100", "--seed", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    for row in report["result"]["rows"].as_array().unwrap() {
        assert_eq!(row["complex_count"], 6);
    }
}

#[test]
fn census_rejects_unsupported_sizes() {
    let out = tndg(&[
        "census", "--kind", "z", "--n", "3", "--k", "3", "--trials", "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = tndg(&[
        "census", "--kind", "svt", "--dims", "4,4,4", "--trials", "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracles_on_e1_cubed() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "a.json", E1_CUBED);
    let sweep = json(&tndg(&["oracle", "sweep", "--in", p(&input)]));
    assert_eq!(sweep["result"]["pairs"].as_array().unwrap().len(), 4);
    let ecount = json(&tndg(&["oracle", "ecount", "--in", p(&input)]));
    assert_eq!(ecount["result"]["distinct"], 2);
}

#[test]
fn bad_thread_setting_is_input_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_tndg"))
        .args(["odeco", "enumerate", "--n", "2", "--k", "3"])
        .env("TNDG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
