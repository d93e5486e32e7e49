use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn kslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kslab")).args(args).env_remove("KSLAB_SEED").output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn header(out: &Output) -> Value {
    let err = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(err.lines().next().unwrap()).unwrap()
}

#[test]
fn phase_examples() {
    let v = json(&kslab(&["phase", "--p", "0.04,0.16,0.8"]));
    assert_eq!(v["regime"], "supercritical");
    assert!((v["density"].as_f64().unwrap() - 0.488762).abs() < 1e-5);
    assert!((v["Theta"].as_f64().unwrap() - 0.4176).abs() < 1e-12);

    let p3 = 3f64.sqrt() / 2.0;
    let v = json(&kslab(&["phase", "--p", &format!("{},0,{}", 1.0 - p3, p3)]));
    assert_eq!(v["regime"], "critical");

    let v = json(&kslab(&["phase", "--p", "0.5,0.3,0.2"]));
    assert_eq!(v["regime"], "subcritical");
    assert!((v["Theta"].as_f64().unwrap() + 1.91).abs() < 1e-12);
    assert!(v.get("density").is_none());
}

#[test]
fn exit_codes() {
    assert_eq!(kslab(&["phase", "--p", "0.5,0.5,0.5"]).status.code(), Some(2));
    assert_eq!(kslab(&["phase", "--p", "a,b"]).status.code(), Some(2));
    assert_eq!(kslab(&["sample", "--seq", "1,1,0"]).status.code(), Some(2));
    assert_eq!(kslab(&["core", "--seq", "2,0,0", "--graph", "x"]).status.code(), Some(2));
    assert_eq!(kslab(&["nonsense"]).status.code(), Some(2));
    assert_eq!(kslab(&["core", "--graph", "/nonexistent/graph.txt"]).status.code(), Some(3));
    // no leaves: the fluid solver cannot start
    assert_eq!(kslab(&["fluid", "--p", "0,0.5,0.5"]).status.code(), Some(3));
}

#[test]
fn core_examples() {
    let v = json(&kslab(&["core", "--seq", "0,3,0", "--seed", "9"]));
    assert_eq!(v["core_size"], 6);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.txt");
    fs::write(&path, "3 4\n0 1\n1 2\n").unwrap();
    let export = dir.path().join("core.txt");
    let v = json(&kslab(&["core", "--graph", path.to_str().unwrap(), "--export", export.to_str().unwrap()]));
    assert_eq!(v["core_size"], 0);
    assert_eq!(v["independent_set"], 1);
    assert!(fs::read_to_string(&export).unwrap().starts_with("0 0"));
}

#[test]
fn sample_then_core_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    assert!(kslab(&["sample", "--seq", "30,40,50", "--seed", "4", "--out", g.to_str().unwrap()]).status.success());
    let from_file = json(&kslab(&["core", "--graph", g.to_str().unwrap(), "--policy", "first"]));
    let direct = json(&kslab(&["core", "--seq", "30,40,50", "--seed", "4"]));
    assert_eq!(from_file["core_size"], direct["core_size"]);
    assert_eq!(from_file["core_histogram"], direct["core_histogram"]);
}

#[test]
fn seed_from_environment() {
    let run = |env: Option<&str>, args: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_kslab"));
        c.args(args).env_remove("KSLAB_SEED");
        if let Some(s) = env {
            c.env("KSLAB_SEED", s);
        }
        c.output().unwrap()
    };
    let a = run(Some("42"), &["explore", "--seq", "100,100,100"]);
    let b = run(None, &["explore", "--seq", "100,100,100", "--seed", "42"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(header(&a)["master_seed"], 42);
    let c = run(None, &["explore", "--seq", "100,100,100"]);
    assert_eq!(header(&c)["master_seed"], 0);
}

#[test]
fn headers_are_reproducible_without_timestamp() {
    let a = kslab(&["--no-timestamp", "fluid", "--p", "0.3,0.3,0.4"]);
    let b = kslab(&["--no-timestamp", "fluid", "--p", "0.3,0.3,0.4"]);
    assert_eq!(a.stderr, b.stderr);
    assert_eq!(a.stdout, b.stdout);
    let h = header(&a);
    assert_eq!(h["version"], env!("CARGO_PKG_VERSION"));
    assert!(h["config_hash"].is_string());
    assert!(header(&kslab(&["fluid", "--p", "0.3,0.3,0.4"]))["timestamp"].is_u64());
    let other = kslab(&["--no-timestamp", "fluid", "--p", "0.3,0.31,0.39"]);
    assert_ne!(header(&other)["config_hash"], h["config_hash"]);
}

#[test]
fn critical_output_is_byte_identical() {
    let args = ["critical", "--n", "10000", "--trials", "10", "--seed", "7"];
    let a = kslab(&args);
    let b = kslab(&[&args[..], &["--jobs", "3"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 10);
}

#[test]
fn critical_to_file_with_resume_and_several_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.jsonl");
    let o = out.to_str().unwrap();
    let full = kslab(&["critical", "--n", "1000", "--n", "2000", "--trials", "6", "--seed", "3", "--out", o]);
    let summary = json(&full);
    assert_eq!(summary["groups"].as_array().unwrap().len(), 2);
    let reference = fs::read_to_string(&out).unwrap();
    assert_eq!(reference.lines().count(), 12);

    // drop the last trials and resume
    let kept: Vec<&str> = reference.lines().take(4).collect();
    fs::write(&out, kept.join("\n") + "\n").unwrap();
    let again = kslab(&["critical", "--n", "1000", "--n", "2000", "--trials", "6", "--seed", "3", "--out", o, "--resume"]);
    assert!(again.status.success());
    let mut a: Vec<&str> = reference.lines().collect();
    let resumed = fs::read_to_string(&out).unwrap();
    let mut b: Vec<&str> = resumed.lines().collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

#[test]
fn fluid_reports_extinction() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    let v = json(&kslab(&["fluid", "--p", "0.04,0.16,0.8", "--csv", csv.to_str().unwrap()]));
    assert!(v["t_ext"].as_f64().unwrap() > 0.0);
    // the fluid solution through this start ends at 0.6525, not at the
    // density of the maximal solution
    assert!((v["S_ext"].as_f64().unwrap() - 0.6525).abs() < 1e-8);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,X,Y,Z\n0,0.04,0.16,0.8"));
}

#[test]
fn vartheta_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let run = |seed: &str, map: &str, out: &std::path::Path| {
        let o = kslab(&["vartheta", "--count", "200", "--seed", seed, "--dt", "1e-4", "--map", map, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run("1", "raw", &a);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next(), Some("vartheta"));
    assert_eq!(text.lines().count(), 201);

    let same = json(&kslab(&["compare", a.to_str().unwrap(), a.to_str().unwrap()]));
    assert_eq!(same["statistic"], 0.0);

    run("2", "d2", &b);
    let v = json(&kslab(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]));
    assert!(v["statistic"].as_f64().unwrap() > 0.0);

    assert_eq!(kslab(&["vartheta", "--count", "2", "--dt", "0.5"]).status.code(), Some(2));
}

#[test]
fn compare_reads_record_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    assert!(kslab(&["critical", "--n", "1000", "--trials", "5", "--out", out.to_str().unwrap()]).status.success());
    let o = out.to_str().unwrap();
    for field in ["r2", "r3", "t_theta", "D2"] {
        let v = json(&kslab(&["compare", o, o, "--field", field]));
        assert_eq!(v["statistic"], 0.0);
    }
    assert_eq!(kslab(&["compare", o, o, "--field", "bogus"]).status.code(), Some(2));
}

#[test]
fn explore_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let v = json(&kslab(&["explore", "--seq", "2,0,0", "--record", "full", "--csv", csv.to_str().unwrap()]));
    assert_eq!(v["theta"], 1);
    assert_eq!((v["D2"].as_u64(), v["D3"].as_u64()), (Some(0), Some(0)));
    assert_eq!(fs::read_to_string(&csv).unwrap(), "k,X,Y,Z\n0,2,0,0\n1,0,0,0\n");
    assert_eq!(kslab(&["explore", "--seq", "2,0,0", "--record", "every:0"]).status.code(), Some(2));
}
