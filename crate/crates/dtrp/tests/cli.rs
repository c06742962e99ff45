use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn dtrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtrp")).args(args).output().expect("runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

#[test]
fn plan_writes_result_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = dtrp(&["plan", "dvt-small", "--strategy", "sensitivity", "--jobs", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["plans"][0]["steps"], serde_json::json!(["Presentation", "Veno", "Treat_Veno+"]));
    assert_eq!(v["stats"]["complete"], true);
    assert_eq!(v["config"]["domain"], "dvt-small");
}

#[test]
fn exit_codes() {
    assert_eq!(code(&dtrp(&["validate", "tomato"])), 0);
    assert_eq!(code(&dtrp(&["validate", "no-such-domain"])), 1);
    assert_eq!(code(&dtrp(&["plan", "tomato", "--strategy", "bogus"])), 2);
    assert_eq!(code(&dtrp(&["plan", "test-pair", "--param", "NOPE=1"])), 2);
    assert_eq!(code(&dtrp(&["plan", "test-pair", "--param", "COST_FATALITY=x"])), 2);
    assert_eq!(code(&dtrp(&["gen", "--branching", "1"])), 2);
    assert_eq!(code(&dtrp(&["frobnicate"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"attributes\": [}").unwrap();
    assert_eq!(code(&dtrp(&["validate", bad.to_str().unwrap()])), 1);
    let csv = dir.path().join("out.csv");
    let o = dtrp(&["bench", "dvt-small", bad.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(!csv.exists());
}

#[test]
fn gen_is_reproducible() {
    let a = dtrp(&["gen", "--seed", "9", "--plans-target", "40"]);
    let b = dtrp(&["gen", "--seed", "9", "--plans-target", "40"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, dtrp(&["gen", "--seed", "10", "--plans-target", "40"]).stdout);
}

#[test]
fn bench_csv() {
    let o = dtrp(&["bench", "dvt-small", "--strategies", "first,priority", "--sweep", "COST_FATALITY=50000:100000:2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap().len(), 11);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    // two drips strategies and the baseline at each of two points
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().any(|row| &row[1] == "bb"));
}
