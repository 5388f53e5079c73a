use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bernsvm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bernsvm")).args(args).current_dir(dir).output().expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = bernsvm(args, dir);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn simulated(dir: &Path) {
    ok(&["simulate", "--scenario", "s1", "--n", "60", "--p", "20", "--seed", "3", "--out", "d.csv"], dir);
}

fn key(text: &str, k: &str) -> String {
    text.lines().find_map(|l| l.strip_prefix(&format!("{k}="))).unwrap_or_else(|| panic!("no {k} in {text}")).to_string()
}

#[test]
fn fit_writes_a_converged_model() {
    let dir = TempDir::new().unwrap();
    simulated(dir.path());
    let out = ok(
        &["fit", "--data", "d.csv", "--label", "y", "--penalty", "en", "--lambda1", "0.1", "--lambda2", "0.01", "--delta", "2", "--engine", "irls"],
        dir.path(),
    );
    let model: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(model["converged"], serde_json::Value::Bool(true));
    assert_eq!(model["engine"], "irls");
    assert_eq!(model["beta"].as_array().unwrap().len(), 20);
    assert!(stderr(&out).contains("converged=true"));
}

#[test]
fn missing_label_is_a_data_error_naming_the_column() {
    let dir = TempDir::new().unwrap();
    simulated(dir.path());
    let out = bernsvm(&["fit", "--data", "d.csv", "--label", "outcome", "--lambda1", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("outcome"));
}

#[test]
fn unreadable_or_malformed_data_exits_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(bernsvm(&["fit", "--data", "nope.csv", "--lambda1", "0.1"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("bad.csv"), "y,x1\n1,0.5\n-1,abc\n").unwrap();
    assert_eq!(bernsvm(&["fit", "--data", "bad.csv", "--lambda1", "0.1"], dir.path()).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    simulated(dir.path());
    assert_eq!(bernsvm(&["fit", "--data", "d.csv"], dir.path()).status.code(), Some(1));
    assert_eq!(bernsvm(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(bernsvm(&["fit", "--data", "d.csv", "--lambda1", "0.1", "--delta", "0"], dir.path()).status.code(), Some(1));
    assert_eq!(bernsvm(&["fit", "--data", "d.csv", "--lambda1", "0.1", "--penalty", "ridge"], dir.path()).status.code(), Some(1));
    assert_eq!(bernsvm(&["simulate", "--scenario", "s3", "--xi", "2"], dir.path()).status.code(), Some(1));
    assert_eq!(bernsvm(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn strict_non_convergence_exits_3() {
    let dir = TempDir::new().unwrap();
    simulated(dir.path());
    let args = ["fit", "--data", "d.csv", "--lambda1", "0.001", "--delta", "0.05", "--max-passes", "1"];
    assert_eq!(bernsvm(&args, dir.path()).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(bernsvm(&strict, dir.path()).status.code(), Some(3));
}

#[test]
fn lambda_max_gives_the_null_model() {
    let dir = TempDir::new().unwrap();
    simulated(dir.path());
    let path = stdout(&ok(&["path", "--data", "d.csv", "--n-lambda", "5"], dir.path()));
    let first = path.lines().nth(1).unwrap();
    let lmax = first.split(',').next().unwrap();
    assert_eq!(first.split(',').nth(1), Some("0"));
    let model: serde_json::Value = serde_json::from_str(&stdout(&ok(&["fit", "--data", "d.csv", "--lambda1", lmax], dir.path()))).unwrap();
    assert!(model["beta"].as_array().unwrap().iter().all(|b| b.as_f64() == Some(0.0)));
}

#[test]
fn saved_models_predict_like_fresh_ones() {
    let dir = TempDir::new().unwrap();
    simulated(dir.path());
    ok(&["fit", "--data", "d.csv", "--lambda1", "0.05", "--out", "m.json"], dir.path());
    let a = ok(&["predict", "--model", "m.json", "--data", "d.csv"], dir.path());
    let b = ok(&["predict", "--model", "m.json", "--data", "d.csv", "--out", "p.csv"], dir.path());
    assert_eq!(stdout(&a), fs::read_to_string(dir.path().join("p.csv")).unwrap());
    assert!(stdout(&a).starts_with("score,prediction\n"));
    let mr: f64 = key(&stdout(&b), "mr").parse().unwrap();
    assert!((0.0..=0.5).contains(&mr));
}

#[test]
fn cv_is_reproducible() {
    let dir = TempDir::new().unwrap();
    simulated(dir.path());
    let args = |o: &'static str, m: &'static str| {
        vec!["cv", "--data", "d.csv", "--folds", "5", "--seed", "7", "--n-lambda", "15", "--out", o, "--model-out", m]
    };
    let a = ok(&args("a.csv", "a.json"), dir.path());
    let b = ok(&args("b.csv", "b.json"), dir.path());
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(stdout(&a), stdout(&b));
    let lmin: f64 = key(&stdout(&a), "lambda_min").parse().unwrap();
    let l1se: f64 = key(&stdout(&a), "lambda_1se").parse().unwrap();
    assert!(l1se >= lmin);
    assert!(String::from_utf8(read("a.csv")).unwrap().starts_with("lambda,mean_mr,sd_mr,nnz\n"));
}

#[test]
fn cv_runs_on_four_rows() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("t.csv"), "y,x1,x2\n1,1.0,0.2\n1,2.0,-0.1\n-1,-1.0,0.3\n-1,-2.5,0.0\n").unwrap();
    let out = ok(&["cv", "--data", "t.csv", "--folds", "2", "--n-lambda", "10"], dir.path());
    assert!(stdout(&out).starts_with("lambda,mean_mr,sd_mr,nnz\n"));
    assert!(key(&stderr(&out), "lambda_min").parse::<f64>().unwrap() > 0.0);
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    for o in ["a.csv", "b.csv"] {
        ok(&["simulate", "--scenario", "s3", "--n", "50", "--p", "80", "--xi", "0.3", "--rho", "0.8", "--seed", "2", "--out", o], dir.path());
    }
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.truth.json"), read("b.truth.json"));
    let truth: serde_json::Value = serde_json::from_slice(&read("a.truth.json")).unwrap();
    assert_eq!(truth["active_set"].as_array().unwrap().len(), 24);
}

#[test]
fn bench_cells_are_reproducible_without_times() {
    let dir = TempDir::new().unwrap();
    let args = ["bench", "--scenario", "s1", "--n", "40", "--p", "30", "--reps", "1", "--seed", "5", "--deltas", "0.5,2", "--n-lambda", "10", "--no-times"];
    let a = stdout(&ok(&args, dir.path()));
    let b = stdout(&ok(&args, dir.path()));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 3);
    assert!(a.lines().next().unwrap().contains("gcd_time,irls_time"));
    assert!(a.contains("NA"));
}

#[test]
fn bench_accuracy_summary_row() {
    let dir = TempDir::new().unwrap();
    let args = ["bench", "--scenario", "s3", "--n", "40", "--p", "60", "--reps", "2", "--folds", "3", "--n-lambda", "10", "--n-test", "50"];
    let a = stdout(&ok(&args, dir.path()));
    assert_eq!(a, stdout(&ok(&args, dir.path())));
    assert!(a.starts_with("scenario,rho,xi,penalty,lambda2,reps,mr,se,sp,pr,rc\ns3,"));
}

#[test]
fn bench_verify_passes() {
    let dir = TempDir::new().unwrap();
    let out = stdout(&ok(&["bench", "--verify", "--reps", "3", "--strict"], dir.path()));
    assert!(out.lines().count() > 1);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    simulated(dir.path());
    let run = |t: &str| stdout(&ok(&["--threads", t, "cv", "--data", "d.csv", "--folds", "4", "--n-lambda", "10", "--seed", "2"], dir.path()));
    assert_eq!(run("1"), run("4"));
}
