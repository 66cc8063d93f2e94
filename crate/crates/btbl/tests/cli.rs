//! Contract tests for the `btbl` binary: exit codes, JSON output shapes, and
//! file artifacts, exercised through real process invocations.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

use btbl::table::{Color, Table};
use btbl::Params;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_btbl")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().expect("spawn btbl");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

/// Run and parse the first stdout line as JSON.
fn run_json(args: &[&str]) -> (i32, Value) {
    let (code, stdout, stderr) = run(args);
    let line = stdout.lines().next().unwrap_or_else(|| {
        panic!("no stdout from {args:?}; stderr: {stderr}");
    });
    (code, serde_json::from_str(line).expect("stdout line is JSON"))
}

fn micro() -> Params {
    Params::new(3, 2, 2, 1, 2, 1.0)
}

fn write_micro_params(dir: &Path) -> PathBuf {
    let path = dir.join("micro.json");
    std::fs::write(&path, r#"{ "n": 3, "n1": 2, "m": 2, "k": 1, "d": 2, "delta": 1.0 }"#).unwrap();
    path
}

fn save_latin(dir: &Path) -> PathBuf {
    let table = Table::from_fn(micro(), |x, y| ((x + y) % 4) as Color).unwrap();
    let path = dir.join("latin.btbl");
    table.save(&path).unwrap();
    path
}

fn save_constant(dir: &Path) -> PathBuf {
    let table = Table::zero(micro()).unwrap();
    let path = dir.join("constant.btbl");
    table.save(&path).unwrap();
    path
}

#[test]
fn check_balanced_table_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let latin = save_latin(dir.path());
    for checker in ["exact", "full"] {
        let (code, v) = run_json(&["check", "--table", latin.to_str().unwrap(), "--checker", checker]);
        assert_eq!(code, 0);
        assert_eq!(v, json!({ "verdict": "balanced" }));
    }
}

#[test]
fn check_violation_reports_lex_first_witness() {
    let dir = tempfile::tempdir().unwrap();
    let constant = save_constant(dir.path());
    let (code, v) = run_json(&["check", "--table", constant.to_str().unwrap()]);
    assert_eq!(code, 1);
    // First offending pair in scan order: rows {0,1}, color {0}; all eight
    // cells hit the color against an allowance of 2·(1/4)·2·4 = 4.
    assert_eq!(
        v,
        json!({
            "verdict": "violation",
            "witness": {
                "rows": [0, 1],
                "colors": [0],
                "count": 8,
                "threshold_num": 4,
                "threshold_den": 1
            }
        })
    );
}

#[test]
fn check_sampling_estimates_violation_rate() {
    let dir = tempfile::tempdir().unwrap();
    let constant = save_constant(dir.path());
    let latin = save_latin(dir.path());
    let (code, v) = run_json(&[
        "check", "--table", constant.to_str().unwrap(),
        "--checker", "sample", "--samples", "500", "--rng-seed", "1",
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["samples"], json!(500));
    assert!(v["violations"].as_u64().unwrap() > 0);
    assert!(v["ci_low"].as_f64().unwrap() > 0.0);
    let (code, v) = run_json(&[
        "check", "--table", latin.to_str().unwrap(),
        "--checker", "sample", "--samples", "500", "--rng-seed", "1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["violations"], json!(0));
}

#[test]
fn check_delta_scale_loosens_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let constant = save_constant(dir.path());
    let path = constant.to_str().unwrap();
    // At twice the allowance the constant table squeaks through (8 > 8 fails).
    let (code, v) = run_json(&["check", "--table", path, "--delta-scale", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], json!("balanced"));
    // A 3% slack is nowhere near enough.
    let (code, _) = run_json(&["check", "--table", path, "--delta-scale", "1.03"]);
    assert_eq!(code, 1);
    // Fraction syntax is not part of the contract: decimal literals only.
    let (code, _, _) = run(&["check", "--table", path, "--delta-scale", "103/100"]);
    assert_eq!(code, 2);
}

#[test]
fn gen_table_random_writes_table_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_micro_params(dir.path());
    let out = dir.path().join("t.btbl");
    let (code, v) = run_json(&[
        "gen-table", "--params", params.to_str().unwrap(),
        "--method", "random", "--rng-seed", "42",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["method"], json!("random"));
    assert_eq!(v["rng_seed"], json!(42));
    assert!(v["tries_used"].as_u64().unwrap() >= 1);
    // Sidecar carries the same record; the table itself must pass the checker.
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{}.json", out.display())).unwrap())
            .unwrap();
    assert_eq!(sidecar["method"], json!("random"));
    assert_eq!(sidecar["params"]["n"], json!(3));
    let (code, v) = run_json(&["check", "--table", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], json!("balanced"));
}

#[test]
fn gen_table_brute_finds_smallest_shape() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("tiny.json");
    std::fs::write(&params, r#"{ "n": 2, "n1": 1, "m": 1, "k": 0, "d": 1, "delta": 0.0 }"#).unwrap();
    let out = dir.path().join("tiny.btbl");
    let (code, v) = run_json(&[
        "gen-table", "--params", params.to_str().unwrap(),
        "--method", "brute", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["method"], json!("brute"));
    let (code, _) = run_json(&["check", "--table", out.to_str().unwrap()]);
    assert_eq!(code, 0);
}

#[test]
fn gen_table_brute_hits_guard_on_large_space() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_micro_params(dir.path());
    let out = dir.path().join("never.btbl");
    // 2^64 candidate tables: refused up front with the guard exit code.
    let (code, _, stderr) = run(&[
        "gen-table", "--params", params.to_str().unwrap(),
        "--method", "brute", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    assert!(stderr.contains("guard"), "stderr: {stderr}");
    assert!(!out.exists());
}

#[test]
fn gen_table_nw_records_winning_seed() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_micro_params(dir.path());
    let out = dir.path().join("nw.btbl");
    let (code, v) = run_json(&[
        "gen-table", "--params", params.to_str().unwrap(),
        "--method", "nw", "--t", "16", "--l", "2", "--r", "1",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["method"], json!("nw"));
    assert_eq!(v["nw"]["t"], json!(16));
    assert_eq!(v["nw"]["seed"], json!(643));
    let (code, _) = run_json(&["check", "--table", out.to_str().unwrap()]);
    assert_eq!(code, 0);
}

#[test]
fn extract_reads_single_cells() {
    let dir = tempfile::tempdir().unwrap();
    let latin = save_latin(dir.path());
    let (code, v) = run_json(&["extract", "--table", latin.to_str().unwrap(), "--x", "3", "--y", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v, json!({ "x": 3, "y": 2, "color": 1 }));
    // Out-of-range coordinates are a validation error.
    let (code, _, _) = run(&["extract", "--table", latin.to_str().unwrap(), "--x", "8", "--y", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn bounds_advice_reports_exact_main_term() {
    let (code, v) = run_json(&[
        "bounds", "advice", "--sigma", "0.5", "--h", "1", "--n", "1024", "--m", "512",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["main_term_num"], json!(1));
    assert_eq!(v["main_term_den"], json!(6));
    assert!((v["main_term"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-6);
    assert!(v["correction"].as_f64().unwrap() > 0.0);
}

#[test]
fn bounds_existence_distinguishes_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let micro = write_micro_params(dir.path());
    let (code, v) = run_json(&["bounds", "existence", "--params", micro.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(v["log_bound"].as_f64().unwrap() > 0.0);
    assert_eq!(v["meaningful"], json!(false));

    let strong = dir.path().join("strong.json");
    std::fs::write(&strong, r#"{ "n": 3, "n1": 10, "m": 2, "k": 1, "d": 2, "delta": 3.0 }"#).unwrap();
    let (code, v) = run_json(&["bounds", "existence", "--params", strong.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(v["log_bound"].as_f64().unwrap() < -3000.0);
    assert_eq!(v["meaningful"], json!(true));
}

#[test]
fn bounds_chernoff_tail_is_one_at_three() {
    let (code, v) = run_json(&["bounds", "chernoff", "--mu", "2", "--t", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["upper_tail"], json!(1.0));
    // Below deviation 1 the inequality doesn't apply — validation error.
    let (code, _, _) = run(&["bounds", "chernoff", "--mu", "2", "--t", "0.5"]);
    assert_eq!(code, 2);
}

#[test]
fn bounds_regime_derives_parameter_file() {
    let (code, v) = run_json(&["bounds", "regime", "--n", "30", "--m", "12", "--h", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["n"], json!(30));
    assert_eq!(v["n1"], json!(4));
    assert_eq!(v["k"], json!(12));
    assert_eq!(v["delta"], json!(7.5));
    assert_eq!(v["d"], json!(9)); // ceil(7.5) + c, with c defaulting to 1
    assert_eq!(v["c"], json!(1));
}

#[test]
fn rank_certificates_roundtrip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let latin = save_latin(dir.path());
    let path = latin.to_str().unwrap();
    let (code, v) = run_json(&[
        "rank", "encode", "--table", path, "--x", "0", "--y", "0", "--colors", "0",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["rank"], json!(0));
    let rank = v["rank"].to_string();
    let (code, v) = run_json(&[
        "rank", "decode", "--table", path, "--x", "0", "--colors", "0", "--rank", &rank,
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["column"], json!(0));
    // A cell whose color is outside the set cannot be certified.
    let (code, _, _) = run(&["rank", "encode", "--table", path, "--x", "0", "--y", "1", "--colors", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn advice_find_reports_escaping_column() {
    let dir = tempfile::tempdir().unwrap();
    let latin = save_latin(dir.path());
    let constant = save_constant(dir.path());
    let (code, v) = run_json(&[
        "advice", "find", "--table", latin.to_str().unwrap(), "--x", "0", "--colors", "0",
    ]);
    assert_eq!(code, 0);
    assert!(v["escaping_column"].as_u64().is_some());
    // Every cell of the constant table lands in the set: nothing escapes.
    let (code, v) = run_json(&[
        "advice", "find", "--table", constant.to_str().unwrap(), "--x", "0", "--colors", "0",
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["escaping_column"], json!(null));
}

#[test]
fn circuit_build_eval_stats() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_micro_params(dir.path());
    let latin = save_latin(dir.path());
    let constant = save_constant(dir.path());
    let circuit = dir.path().join("circuit.json");

    let (code, v) = run_json(&[
        "circuit", "build", "--params", params.to_str().unwrap(),
        "--out", circuit.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["depth"], json!(7));

    let (code, v) = run_json(&[
        "circuit", "eval", "--circuit", circuit.to_str().unwrap(),
        "--table", latin.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v, json!({ "accepts": true }));
    let (code, v) = run_json(&[
        "circuit", "eval", "--circuit", circuit.to_str().unwrap(),
        "--table", constant.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert_eq!(v, json!({ "accepts": false }));

    let (code, v) = run_json(&["circuit", "stats", "--params", params.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["input_width"], json!(64));
    assert_eq!(v["size"], json!(433));
    assert_eq!(v["depth"], json!(7));
    assert_eq!(v["pair_count"], json!(112));
    assert_eq!(v["a_num"], json!(400));
    assert_eq!(v["a_den"], json!(99));
}

#[test]
fn design_gen_and_exhaustion() {
    let (code, v) = run_json(&["design", "gen", "--t", "16", "--l", "2", "--r", "1", "--count", "64"]);
    assert_eq!(code, 0);
    assert_eq!(v["sets"].as_array().unwrap().len(), 64);
    assert_eq!(v["seed_len"], json!(16));
    // Four positions cannot host 64 pairwise-disjoint pairs.
    let (code, _, stderr) = run(&["design", "gen", "--t", "4", "--l", "2", "--r", "0", "--count", "64"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("design"), "stderr: {stderr}");
}

#[test]
fn codec_worked_example_roundtrips() {
    let (code, v) = run_json(&["codec", "encode-pair", "--x1", "1", "--x2", "01"]);
    assert_eq!(code, 0);
    assert_eq!(v, json!({ "encoded": "110001101", "length": 9 }));
    let (code, v) = run_json(&["codec", "decode-pair", "--bits", "110001101"]);
    assert_eq!(code, 0);
    assert_eq!(v, json!({ "x1": "1", "x2": "01" }));
    // A lone escape pair is not a valid encoding.
    let (code, _, _) = run(&["codec", "decode-pair", "--bits", "10"]);
    assert_eq!(code, 2);
}

#[test]
fn bench_checks_rate_against_bound() {
    let dir = tempfile::tempdir().unwrap();
    let strong = dir.path().join("strong.json");
    std::fs::write(&strong, r#"{ "n": 3, "n1": 10, "m": 2, "k": 1, "d": 2, "delta": 3.0 }"#).unwrap();
    let (code, v) = run_json(&[
        "bench", "--params", strong.to_str().unwrap(), "--trials", "300",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["trials"], json!(300));
    assert_eq!(v["consistent_with_bound"], json!(true));
    assert!(v["rate"].as_f64().unwrap() > 0.99);
}

#[test]
fn usage_and_validation_errors_exit_two() {
    let (code, _, _) = run(&["no-such-command"]);
    assert_eq!(code, 2);
    // Parameter files violating the shape constraints are rejected.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{ "n": 2, "n1": 1, "m": 1, "k": 3, "d": 1, "delta": 1.0 }"#).unwrap();
    let (code, _, stderr) = run(&["bounds", "existence", "--params", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.starts_with("error:"), "stderr: {stderr}");
    // Missing table files surface as I/O usage errors, not panics.
    let (code, _, _) = run(&["check", "--table", "/nonexistent/t.btbl"]);
    assert_eq!(code, 2);
}
