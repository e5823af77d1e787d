use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gnz(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnz"))
        .args(args)
        .current_dir(dir)
        .env_remove("GNZ_THREADS")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnz(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("build-graph"));
    for sub in ["build-graph", "diffuse", "one-pass", "dynamic-pass", "eval", "gen", "project"] {
        let o = gnz(&[sub, "--help"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(String::from_utf8_lossy(&o.stdout).contains("--seed"), "{sub}");
    }
}

#[test]
fn bad_flag_value_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnz(&["diffuse", "--method", "p3", "--graph", "g", "--labels", "l", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p3"));
    assert_eq!(stderr(&o).lines().count(), 1, "{}", stderr(&o));
    assert_eq!(gnz(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(gnz(&["eval", "--bogus"], dir.path()).status.code(), Some(2));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnz(&["build-graph", "--embeddings", "missing.gnze", "--out", "g.gnzg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).lines().count(), 1);
    assert!(stderr(&o).contains("missing.gnze"));
    assert!(!dir.path().join("g.gnzg").exists());
}

#[test]
fn end_to_end_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let o = gnz(args, d);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        String::from_utf8_lossy(&o.stdout).into_owned()
    };
    ok(&[
        "gen", "two-moons", "--n", "200", "--labels-per-class", "5", "--out", "x.gnze", "--truth", "truth.csv",
        "--labels", "labels.csv", "--seed", "4",
    ]);
    ok(&["build-graph", "--embeddings", "x.gnze", "--out", "g.gnzg", "--k", "8", "--edge-list", "edges.txt"]);
    assert!(fs::read_to_string(d.join("edges.txt")).unwrap().lines().count() > 200);
    for (method, solver) in [("p2", "cg"), ("p2", "dense"), ("p2", "fixed-point"), ("p1", "cg")] {
        let out = format!("pred-{method}-{solver}.csv");
        ok(&[
            "diffuse", "--graph", "g.gnzg", "--labels", "labels.csv", "--method", method, "--solver", solver,
            "--max-iter", "5000", "--out", &out, "--report", "diffuse.json",
        ]);
        let report = ok(&["eval", "--predictions", &out, "--truth", "truth.csv", "--json"]);
        let v: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert!(v["accuracy"].as_f64().unwrap() > 0.9, "{method}/{solver}: {report}");
    }
    ok(&["diffuse", "--graph", "g.gnzg", "--labels", "labels.csv", "--grid", "default", "--out", "grid.csv"]);
    ok(&["project", "--embeddings", "x.gnze", "--out", "xy.csv"]);
    let xy = fs::read_to_string(d.join("xy.csv")).unwrap();
    assert!(xy.starts_with("id,x,y"));
    assert_eq!(xy.lines().count(), 201);

    ok(&[
        "one-pass", "--embeddings", "x.gnze", "--labels", "labels.csv", "--truth", "truth.csv", "--k", "8",
        "--projection", "identity", "--out", "one.csv", "--report", "one.json",
    ]);
    let out = ok(&[
        "dynamic-pass", "--embeddings", "x.gnze", "--labels", "labels.csv", "--k", "8", "--epochs", "3",
        "--projection", "identity", "--json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["epochs"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("cfg.json"),
        r#"{"data": {"kind": "two-moons", "n": 150, "noise": 0.1, "labels_per_class": 5},
            "graph": {"k": 400}, "extractor": {"kind": "mock", "projection": {"kind": "identity"}}}"#,
    )
    .unwrap();
    let o = gnz(&["one-pass", "--config", "cfg.json"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k = 400"), "{}", stderr(&o));
    let o = gnz(&["one-pass", "--config", "cfg.json", "--k", "7", "--out", "p.csv"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(d.join("p.csv").exists());
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a", "b"] {
        let o = gnz(
            &["gen", "blobs", "--n", "50", "--dim", "4", "--seed", "9", "--out", &format!("{name}.gnze"), "--truth", &format!("{name}.csv")],
            d,
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(d.join("a.gnze")).unwrap(), fs::read(d.join("b.gnze")).unwrap());
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
}

#[test]
fn threads_flag_and_env_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = Command::new(env!("CARGO_BIN_EXE_gnz"))
        .args(["gen", "blobs", "--n", "40", "--dim", "3", "--out", "x.gnze", "--truth", "t.csv"])
        .env("GNZ_THREADS", "2")
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = gnz(&["--threads", "1", "build-graph", "--embeddings", "x.gnze", "--out", "g.gnzg", "--k", "3"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
