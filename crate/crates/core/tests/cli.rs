use std::path::PathBuf;

use ospf_models::cli::{main_with, EXIT_ERROR, EXIT_FAIL, EXIT_OK};

fn topo(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "topologies", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ospfsim(args: &[&str]) -> Out {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = main_with(
        std::iter::once("ospfsim").chain(args.iter().copied()),
        &mut o,
        &mut e,
    );
    Out {
        code,
        stdout: String::from_utf8(o).unwrap(),
        stderr: String::from_utf8(e).unwrap(),
    }
}

#[test]
fn run_two_node_detailed() {
    let out = ospfsim(&["run", &topo("two_node.top")]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(
        out.stdout.starts_with("CONVERGED tick=19 msgs=17 "),
        "{}",
        out.stdout
    );
}

#[test]
fn run_is_deterministic() {
    let args = [
        "run",
        &topo("line3.top"),
        "--seed",
        "5",
        "--set",
        "loss_prob=0.2",
        "--trace",
        "-",
    ];
    let a = ospfsim(&args);
    let b = ospfsim(&args);
    assert_eq!(a.code, EXIT_OK);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn run_simple_model_rejects_loss() {
    let out = ospfsim(&[
        "run",
        &topo("line3.top"),
        "--model",
        "simple",
        "--set",
        "loss_prob=0.1",
    ]);
    assert_eq!(out.code, EXIT_ERROR);
    assert!(
        out.stderr.contains("invalid configuration"),
        "{}",
        out.stderr
    );
}

#[test]
fn run_times_out_with_exit_one() {
    let out = ospfsim(&["run", &topo("line3.top"), "--set", "max_ticks=5"]);
    assert_eq!(out.code, EXIT_FAIL);
    assert!(out.stdout.starts_with("TIMEOUT"), "{}", out.stdout);
}

#[test]
fn undeclared_node_names_the_line() {
    let out = ospfsim(&["run", &topo("bad.top")]);
    assert_eq!(out.code, EXIT_ERROR);
    assert!(out.stderr.contains("line 4"), "{}", out.stderr);
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_override_lists_keys() {
    let out = ospfsim(&["run", &topo("line3.top"), "--set", "hellointerval=3"]);
    assert_eq!(out.code, EXIT_ERROR);
    assert!(out.stderr.contains("valid keys"), "{}", out.stderr);
}

#[test]
fn missing_file_is_an_error() {
    let out = ospfsim(&["run", "/nonexistent/x.top"]);
    assert_eq!(out.code, EXIT_ERROR);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ospfsim(&["frobnicate"]).code, EXIT_ERROR);
    let help = ospfsim(&["--help"]);
    assert_eq!(help.code, EXIT_OK);
    assert!(help.stdout.contains("explore"));
}

#[test]
fn explore_small_queue_bound_is_violated() {
    let dir = tempfile::tempdir().unwrap();
    let ce = dir.path().join("ce.jsonl");
    let out = ospfsim(&[
        "explore",
        &topo("line3.top"),
        "--queue-bound",
        "1",
        "--counterexample",
        ce.to_str().unwrap(),
    ]);
    assert_eq!(out.code, EXIT_FAIL, "{}", out.stdout);
    assert!(
        out.stdout.starts_with("VIOLATION property=queue_bound"),
        "{}",
        out.stdout
    );
    let text = std::fs::read_to_string(&ce).unwrap();
    assert!(text.lines().count() > 0);
    let summary = ospfsim(&["summarize", ce.to_str().unwrap()]);
    assert_eq!(summary.code, EXIT_OK, "{}", summary.stderr);
}

#[test]
fn explore_two_node_passes() {
    let out = ospfsim(&["explore", &topo("two_node.top"), "--json"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["outcome"]["outcome"], "pass");
}

#[test]
fn explore_inconclusive_exits_three() {
    let out = ospfsim(&["explore", &topo("line3.top"), "--max-states", "100"]);
    assert_eq!(out.code, 3, "{}", out.stdout);
    assert!(out.stdout.starts_with("INCONCLUSIVE"), "{}", out.stdout);
}

#[test]
fn explore_refuses_large_topologies() {
    let out = ospfsim(&["explore", &topo("big10.top")]);
    assert_eq!(out.code, EXIT_ERROR);
    assert!(out.stderr.contains("at most 4"), "{}", out.stderr);
}

#[test]
fn summarize_totals_match_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let run = ospfsim(&["run", &topo("line3.top"), "--trace", path.to_str().unwrap()]);
    assert_eq!(run.code, EXIT_OK);
    let counts = run
        .stdout
        .split_whitespace()
        .skip(2)
        .collect::<Vec<_>>()
        .join(" ");
    let s = ospfsim(&["summarize", path.to_str().unwrap()]);
    assert_eq!(s.code, EXIT_OK, "{}", s.stderr);
    assert!(
        s.stdout.contains(&format!("totals: {counts}")),
        "{}\n{}",
        run.stdout,
        s.stdout
    );
    assert!(s.stdout.contains("converged at tick"));
}

#[test]
fn summarize_empty_trace() {
    let f = tempfile::NamedTempFile::new().unwrap();
    let s = ospfsim(&["summarize", f.path().to_str().unwrap()]);
    assert_eq!(s.code, EXIT_OK);
    assert!(
        s.stdout.contains("records: 0") && s.stdout.contains("not converged"),
        "{}",
        s.stdout
    );
}

#[test]
fn summarize_truncated_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    ospfsim(&[
        "run",
        &topo("two_node.top"),
        "--trace",
        path.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&path).unwrap();
    let cut = &text[..text.len() - 10];
    let n = cut.lines().count();
    std::fs::write(&path, cut).unwrap();
    let s = ospfsim(&["summarize", path.to_str().unwrap()]);
    assert_eq!(s.code, EXIT_ERROR);
    assert!(s.stderr.contains(&format!("record {n}")), "{}", s.stderr);
}
