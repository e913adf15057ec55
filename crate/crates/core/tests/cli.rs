use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chowlab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("chowlab-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn chow_of_each_function_format() {
    let dir = scratch("formats");
    let ltf = write(
        &dir,
        "ltf.json",
        r#"{"n": 2, "weights": [1, 1], "theta": 2}"#,
    );
    let lbf = write(&dir, "lbf.json", r#"{"n": 1, "kappa": 0.5, "v": [0, 1]}"#);
    let table = write(&dir, "table.json", r#"{"n": 1, "values": [-1, 1]}"#);

    let r = report(&run(&["chow", "--function", &ltf]));
    assert_eq!(r["result"]["values"], serde_json::json!([-0.5, 0.5, 0.5]));
    let r = report(&run(&["chow", "--function", &lbf]));
    assert_eq!(r["result"]["values"], serde_json::json!([0.0, 0.5]));
    let r = report(&run(&["chow", "--function", &table]));
    assert_eq!(r["result"]["values"], serde_json::json!([0.0, 1.0]));
}

#[test]
fn reconstruct_writes_lbf_and_trace() {
    let dir = scratch("reconstruct");
    let alpha = write(&dir, "alpha.json", r#"{"n": 1, "values": [0.0, 1.0]}"#);
    let out = dir.join("g.json");
    let trace = dir.join("trace.json");
    let r = report(&run(&[
        "reconstruct",
        "--alpha",
        &alpha,
        "--eps",
        "0.1",
        "--out",
        s(&out),
        "--trace",
        s(&trace),
    ]));
    assert_eq!(r["summary"]["iterations"], 2);
    let g: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(g["v"], serde_json::json!([0, 42]));
    let t: Value = serde_json::from_str(&fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(t["stop_reason"], "rho");
    assert_eq!(t["rho_history"].as_array().unwrap().len(), 3);
}

#[test]
fn iteration_cap_overrun_exits_3_with_partial_output() {
    let dir = scratch("cap");
    let alpha = write(&dir, "alpha.json", r#"{"n": 1, "values": [0.0, 1.0]}"#);
    let trace = dir.join("trace.json");
    let out = run(&[
        "reconstruct",
        "--alpha",
        &alpha,
        "--eps",
        "0.1",
        "--max-iters",
        "1",
        "--trace",
        s(&trace),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let t: Value = serde_json::from_str(&fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(t["stop_reason"], "cap");
}

#[test]
fn parameter_errors_exit_2() {
    let dir = scratch("params");
    let alpha = write(&dir, "alpha.json", r#"{"n": 1, "values": [0.0, 1.0]}"#);
    assert_eq!(
        run(&["reconstruct", "--alpha", &alpha, "--eps", "-1"])
            .status
            .code(),
        Some(2)
    );
    let bad = write(&dir, "bad.json", r#"{"n": 2, "weights": [1], "theta": 0}"#);
    assert_eq!(run(&["chow", "--function", &bad]).status.code(), Some(2));
    assert_eq!(
        run(&["chow", "--function", "/nonexistent.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn exact_and_weights_round_trip() {
    let dir = scratch("exact");
    let ltf = write(
        &dir,
        "ltf.json",
        r#"{"n": 3, "weights": [2, 1, 1], "theta": 0.5}"#,
    );
    let alpha = dir.join("alpha.json");
    let table = dir.join("table.json");
    let weights = dir.join("w.json");
    report(&run(&["chow", "--function", &ltf, "--out", s(&alpha)]));
    report(&run(&["exact", "--alpha", s(&alpha), "--out", s(&table)]));
    report(&run(&[
        "weights",
        "--table",
        s(&table),
        "--out",
        s(&weights),
    ]));
    let a = report(&run(&["chow", "--function", &ltf]));
    let b = report(&run(&["chow", "--function", s(&weights)]));
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn parity_table_is_not_separable() {
    let dir = scratch("xor");
    let xor = write(&dir, "xor.json", r#"{"n": 2, "values": [1, -1, -1, 1]}"#);
    assert_eq!(run(&["weights", "--table", &xor]).status.code(), Some(3));
}

#[test]
fn approx_and_learners_report_summaries() {
    let dir = scratch("approx");
    let ltf = write(
        &dir,
        "maj.json",
        r#"{"n": 5, "weights": [1, 1, 1, 1, 1], "theta": 0}"#,
    );
    let r = report(&run(&["approx", "--function", &ltf, "--eps", "0.2"]));
    assert!(r["summary"]["dist_final"].as_f64().unwrap() <= 0.4);

    let r = report(&run(&[
        "learn-agnostic",
        "--target",
        &ltf,
        "--eps",
        "0.1",
        "--noise",
        "0.05",
        "--seed",
        "4",
    ]));
    assert!(r["summary"]["samples_consumed"].as_f64().unwrap() > 0.0);

    let r = report(&run(&[
        "learn-rfa",
        "--target",
        &ltf,
        "--n",
        "5",
        "--acc",
        "0.1",
        "--seed",
        "4",
    ]));
    assert!(r["summary"]["dist_final"].as_f64().unwrap() <= 0.5);
}

#[test]
fn probe_writes_csv() {
    let dir = scratch("probe");
    let out = dir.join("probe.csv");
    let r = report(&run(&[
        "probe",
        "--pairs",
        "9",
        "--n",
        "6",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]));
    assert_eq!(r["summary"]["envelope_violations"], 0.0);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "pair,n,flip_percent,dchow,dist,envelope_ok"
    );
    assert_eq!(lines.count(), 9);
}

#[test]
fn same_seed_same_summary() {
    let dir = scratch("determinism");
    let f = dir.join("f.json");
    report(&run(&[
        "random",
        "--n",
        "9",
        "--seed",
        "11",
        "--out",
        s(&f),
    ]));
    let args = [
        "approx",
        "--function",
        s(&f),
        "--eps",
        "0.1",
        "--mode",
        "estimated",
        "--seed",
        "5",
    ];
    let a = report(&run(&args));
    let b = report(&run(&args));
    assert_eq!(a["summary"].to_string(), b["summary"].to_string());
    assert_eq!(a["result"].to_string(), b["result"].to_string());
}

#[test]
fn cap_is_read_from_environment() {
    let dir = scratch("envcap");
    let f = write(
        &dir,
        "f.json",
        r#"{"n": 6, "weights": [1, 1, 1, 1, 1, 1], "theta": 0}"#,
    );
    let out = bin()
        .args(["chow", "--function", &f])
        .env("CHOWLAB_CAP", "4")
        .output()
        .unwrap();
    // exceeding the enumeration cap is a parameter error
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["chow", "--function", &f, "--estimate", "--acc", "0.2"])
        .env("CHOWLAB_CAP", "4")
        .output()
        .unwrap();
    let r = report(&out);
    assert_eq!(r["result"]["n"], 6);
}
