use std::fs;
use std::path::Path;

use cgpp::cli::dispatch;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cgpp").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_exact_solve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let (code, _, err) = run(&["generate", "--n", "10", "--m", "3", "--seed", "5", "--out", p(&inst)]);
    assert_eq!(code, 0, "{err}");

    let (code, out, _) = run(&["exact", "--instance", p(&inst)]);
    assert_eq!(code, 0);
    let exact: Value = serde_json::from_str(&out).unwrap();
    assert!(exact["feasible_exists"].as_bool().unwrap());
    let e_star = exact["E_star"].as_f64().unwrap();

    for pricing in ["exact", "sa"] {
        let (code, out, err) = run(&["solve", "--instance", p(&inst), "--pricing", pricing, "--seed", "3"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        if v["feasible"].as_bool().unwrap() {
            assert_eq!(code, 0, "{err}");
            assert!(v["E"].as_f64().unwrap() >= e_star);
            assert_eq!(v["x"].as_array().unwrap().len(), 10);
        } else {
            assert_eq!(code, 2);
        }
        assert!(v["relax_obj"].as_f64().unwrap() <= e_star + 1e-9);
        assert_eq!(v["cg_termination"], "converged");
        for key in ["cg_iterations", "restoration_flips", "optimization_flips", "time_total_ms"] {
            assert!(v[key].is_number(), "{key}");
        }
    }
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    run(&["generate", "--n", "7", "--m", "2", "--seed", "11", "--out", p(&a)]);
    run(&["generate", "--n", "7", "--m", "2", "--seed", "11", "--out", p(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn solve_reports_no_feasible_solution_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // x=0 breaks the second row and x=1 breaks the first, but their midpoint satisfies both
    let inst = dir.path().join("split.json");
    fs::write(&inst, r#"{"n":1,"m":2,"b":[0.5,-0.5],"Q":[[1,1,1]],"A":[[[1,1,1]],[[1,1,-1]]]}"#).unwrap();
    let init = dir.path().join("init.json");
    fs::write(&init, "[[0],[1]]").unwrap();
    let (code, out, _) = run(&["solve", "--instance", p(&inst), "--initial", p(&init)]);
    assert_eq!(code, 2);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["feasible"], false);
    assert!(v["x"].is_null());
    assert!((v["relax_obj"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["generate", "--n", "3"]).0, 1);
    assert_eq!(run(&["solve", "--instance", "/nonexistent/x.json"]).0, 1);
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    run(&["generate", "--n", "3", "--m", "1", "--out", p(&inst)]);
    let (code, _, err) = run(&["solve", "--instance", p(&inst), "--pricing", "quantum"]);
    assert_eq!(code, 1);
    assert!(!err.is_empty());
    assert_eq!(run(&["solve", "--instance", p(&inst), "--alpha-f", "1.5"]).0, 1);
    fs::write(&inst, "{\"n\": 2,").unwrap();
    let (code, _, err) = run(&["exact", "--instance", p(&inst)]);
    assert_eq!(code, 1);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn help_lists_defaults() {
    let (code, out, _) = run(&["solve", "--help"]);
    assert_eq!(code, 0);
    for needle in ["--alpha-f", "0.1", "--alpha-l", "0.9", "--max-flips", "1000", "--sa-reads", "--pricing"] {
        assert!(out.contains(needle), "{needle} missing from help");
    }
}

#[test]
fn bench_writes_csv_and_fit_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let (code, out, err) = run(&[
        "bench", "--n-list", "6,8", "--ratio-list", "0.2,0.5", "--instances", "2", "--seed", "1", "--methods",
        "cg_exact_pp,random_pp", "--csv", p(&csv), "--jobs", "1",
    ]);
    assert_eq!(code, 0, "{err}");
    let summary: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 2 * 2 * 2);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2 * 2);

    let (code, out, err) = run(&["fit", "--csv", p(&csv), "--x-col", "n", "--y-col", "time_total_ms"]);
    assert_eq!(code, 0, "{err}");
    let fit: Value = serde_json::from_str(&out).unwrap();
    assert!(fit["a"].is_number() && fit["b"].is_number());
}

#[test]
fn fit_recovers_synthetic_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("synthetic.csv");
    let mut text = String::from("n,time_total_ms\n");
    for n in [10, 20, 30, 40] {
        text.push_str(&format!("{n},{}\n", f64::exp(0.04 * n as f64 - 2.02)));
    }
    fs::write(&csv, text).unwrap();
    let (code, out, err) = run(&["fit", "--csv", p(&csv)]);
    assert_eq!(code, 0, "{err}");
    let fit: Value = serde_json::from_str(&out).unwrap();
    assert!((fit["a"].as_f64().unwrap() - 0.04).abs() < 1e-9);
    assert!((fit["b"].as_f64().unwrap() + 2.02).abs() < 1e-9);
    assert_eq!(fit["points"], 4);
}
