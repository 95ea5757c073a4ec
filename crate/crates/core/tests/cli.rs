use std::path::Path;

use robustmatch::cli::run_cli;
use robustmatch::fixtures::GS3_DOCUMENT;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["robustmatch"];
    full.extend_from_slice(args);
    let code = run_cli(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn gs3_file(dir: &Path) -> String {
    let path = dir.join("gs3.json");
    std::fs::write(&path, GS3_DOCUMENT).unwrap();
    path.to_str().unwrap().to_string()
}

fn pairs(report: &Value) -> Vec<(String, String)> {
    report["matching"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_str().unwrap().to_string(), p[1].as_str().unwrap().to_string()))
        .collect()
}

fn owned(list: &[(&str, &str)]) -> Vec<(String, String)> {
    list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

#[test]
fn solve_reports_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let input = gs3_file(dir.path());
    let (code, out, _) = run(&["solve", "--input", &input, "--nu", "1", "--mode", "stable"]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["psi"], "30/1");
    assert_eq!(pairs(&report), owned(&[("m1", "w2"), ("m2", "w3"), ("m3", "w1")]));
    assert_eq!(report["stable"], true);

    let (code, out, _) = run(&["solve", "--input", &input, "--nu", "0"]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["psi"], "9/4");
    assert_eq!(pairs(&report), owned(&[("m1", "w1"), ("m2", "w2"), ("m3", "w3")]));
    let terms: Vec<&str> = report["psi_by_leaver"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["leaver"].as_str().unwrap())
        .collect();
    assert_eq!(terms, ["phi", "m1"]);
}

#[test]
fn report_key_order_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let input = gs3_file(dir.path());
    let args = ["solve", "--input", &input, "--nu", "1/2", "--mode", "relaxed"];
    let (_, first, _) = run(&args);
    let (_, second, _) = run(&args);
    assert_eq!(first, second);
    let report: Value = serde_json::from_str(&first).unwrap();
    let keys: Vec<&String> = report.as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        ["mode", "nu", "conventions", "matching", "psi", "psi_by_leaver", "expected_blocking_pairs", "stable"]
    );
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = gs3_file(dir.path());
    let target = dir.path().join("report.json");
    let (code, out, _) = run(&["solve", "--input", &input, "--nu", "0.25", "--output", target.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(report["nu"], "1/4");
}

#[test]
fn evaluate_given_matching() {
    let dir = tempfile::tempdir().unwrap();
    let input = gs3_file(dir.path());
    let (code, out, _) = run(&["evaluate", "--input", &input, "--nu", "0", "--matching", "m1:w3,m2:w1,m3:w2"]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["psi"], "81/4");
    let (code, _, err) = run(&["evaluate", "--input", &input, "--nu", "0", "--matching", "m1:m2"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"));
}

#[test]
fn enumerate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = gs3_file(dir.path());
    let (code, out, _) = run(&["enumerate", "--input", &input, "--what", "stable"]);
    assert_eq!(code, 0);
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["count"], 3);
    let (_, out, _) = run(&["enumerate", "--input", &input, "--what", "edges"]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["edges"], serde_json::json!([[0, 1]]));
    let (_, out, _) = run(&["enumerate", "--input", &input, "--what", "all-matchings"]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["count"], 34);
}

#[test]
fn compare_rows_are_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let input = gs3_file(dir.path());
    let (code, out, _) = run(&["compare", "--input", &input, "--nu", "1"]);
    assert_eq!(code, 0);
    let doc: Value = serde_json::from_str(&out).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r["policy"].as_str().unwrap()).collect();
    assert_eq!(names, ["men_optimal", "women_optimal", "min_sumsq", "robust", "relaxed"]);
    let psi = |i: usize| rows[i]["psi"].as_str().unwrap().to_string();
    assert_eq!(psi(0), "69/2");
    assert_eq!(psi(1), "69/2");
    assert_eq!(psi(3), "30/1");
}

#[test]
fn generate_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("gen.json");
    let path = target.to_str().unwrap();
    let (code, _, _) = run(&["generate", "--n", "5", "--seed", "7", "--leavers", "3", "--nu", "1/3", "--output", path]);
    assert_eq!(code, 0);
    let first = std::fs::read_to_string(&target).unwrap();
    run(&["generate", "--n", "5", "--seed", "7", "--leavers", "3", "--nu", "1/3", "--output", path]);
    assert_eq!(first, std::fs::read_to_string(&target).unwrap());
    let (code, out, _) = run(&["solve", "--input", path]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["nu"], "1/3");
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = gs3_file(dir.path());
    assert_eq!(run(&["solve", "--input", &input]).0, 1);
    assert_eq!(run(&["solve", "--input", "/nonexistent/file.json", "--nu", "1"]).0, 1);
    assert_eq!(run(&["solve", "--input", &input, "--nu", "3/2"]).0, 1);
    assert_eq!(run(&["solve", "--input", &input, "--nu", "1", "--bogus"]).0, 1);
    let tied = GS3_DOCUMENT.replace(r#"["w2", 2, 1]"#, r#"["w2", 1, 1]"#);
    let bad = dir.path().join("tied.json");
    std::fs::write(&bad, tied).unwrap();
    assert_eq!(run(&["solve", "--input", bad.to_str().unwrap(), "--nu", "1"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}
