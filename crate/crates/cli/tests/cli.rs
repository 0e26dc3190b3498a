use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linefree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn full_space_grid() -> String {
    let mut s = String::from("linefree-grid v1\np=5 n=3 k=5\n");
    for layer in 0..5 {
        s.push_str(&format!("layer {layer}\n"));
        for _ in 0..5 {
            s.push_str("XXXXX\n");
        }
    }
    s
}

#[test]
fn construct_then_verify_qr7() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("out.grid");
    let out = run(&[
        "construct",
        "--family",
        "qr",
        "-p",
        "7",
        "-o",
        path_str(&grid),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&["verify", "-k", "7", path_str(&grid), "--json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["size"], 225);
    assert_eq!(v["free"], true);
}

#[test]
fn verify_full_space_reports_witness() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("full.grid");
    fs::write(&grid, full_space_grid()).unwrap();
    let out = run(&["verify", "-k", "5", path_str(&grid), "--json"]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["free"], false);
    assert!(v["witness"].is_object());
}

#[test]
fn certify_74_is_infeasible_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c74.json");
    let out = run(&[
        "certify",
        "-p",
        "5",
        "--target",
        "74",
        "-o",
        path_str(&cert),
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("verdict: INFEASIBLE"));
    let out = run(&["certify", "--replay", path_str(&cert), "--json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["verdict"], "INFEASIBLE");
}

#[test]
fn certify_70_is_unknown() {
    let out = run(&["certify", "-p", "5", "--target", "70", "--json"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["verdict"], "UNKNOWN");
}

#[test]
fn tampered_certificate_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    assert_eq!(
        code(&run(&[
            "certify",
            "-p",
            "5",
            "--target",
            "74",
            "-o",
            path_str(&cert)
        ])),
        0
    );
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    v["weights"] = serde_json::json!({"kind": "unique", "basis": [1, -2, -4]});
    fs::write(&cert, v.to_string()).unwrap();
    let out = run(&["certify", "--replay", path_str(&cert)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bounds_json_for_f5_cubed() {
    let out = run(&["bounds", "-p", "5", "-n", "3", "--json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["lower"]["reference-set"]["size"], "70");
    assert_eq!(v["upper"]["certified"]["value"], "73");
    assert!(v["version"].is_string());
}

#[test]
fn rates() {
    let out = run(&["rate", "--size", "70", "--dim", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "4.121\n");
    let out = run(&["rate", "--fgr", "-p", "5"]);
    assert_eq!(stdout(&out), "4.090\n");
    assert_eq!(code(&run(&["rate", "--size", "70"])), 2);
}

#[test]
fn render_small_cube() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("c.grid");
    assert_eq!(
        code(&run(&[
            "construct",
            "--family",
            "hypercube",
            "-p",
            "3",
            "-n",
            "2",
            "-o",
            path_str(&grid)
        ])),
        0
    );
    let out = run(&["render", path_str(&grid)]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out),
        "linefree-grid v1\np=3 n=2 k=3\nlayer -\nXX.\nXX.\n...\n"
    );
    let out = run(&["render", path_str(&grid), "--tikz"]);
    let tikz = stdout(&out);
    assert!(tikz.starts_with("\\documentclass"));
    assert_eq!(tikz.matches("circle").count(), 4);
}

#[test]
fn search_optimal_and_budget_limited() {
    let out = run(&[
        "search", "-p", "5", "-n", "2", "-k", "5", "--budget", "60s", "--json",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["size"], 16);
    assert_eq!(v["optimal"], true);
    assert!(v.get("nodes").is_none());

    let out = run(&[
        "search", "-p", "7", "-n", "2", "-k", "7", "--nodes", "50", "--json",
    ]);
    assert_eq!(code(&out), 4);
    assert_eq!(json(&out)["optimal"], false);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let a = run(&["--threads", "1", "search", "-p", "5", "-n", "2", "-k", "4"]);
    let b = run(&["--threads", "3", "search", "-p", "5", "-n", "2", "-k", "4"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[
        "--threads",
        "2",
        "certify",
        "-p",
        "7",
        "--target",
        "243",
        "--json",
    ]);
    let d = run(&[
        "--threads",
        "1",
        "certify",
        "-p",
        "7",
        "--target",
        "243",
        "--json",
    ]);
    assert_eq!(code(&c), 0);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn timing_is_opt_in() {
    let out = run(&[
        "--timing", "search", "-p", "3", "-n", "2", "-k", "3", "--json",
    ]);
    let v = json(&out);
    assert!(v["nodes"].is_u64());
    assert!(v["wall_time_ms"].is_u64());
}

#[test]
fn product_of_grid_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.grid");
    let b = dir.path().join("b.grid");
    let c = dir.path().join("c.grid");
    assert_eq!(
        code(&run(&[
            "construct",
            "--family",
            "hypercube",
            "-p",
            "5",
            "-n",
            "2",
            "-o",
            path_str(&a)
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "construct",
            "--family",
            "hypercube",
            "-p",
            "5",
            "-n",
            "1",
            "-o",
            path_str(&b)
        ])),
        0
    );
    let out = run(&[
        "product",
        path_str(&a),
        path_str(&b),
        "-o",
        path_str(&c),
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["size"], 64);
    let out = run(&["verify", "-k", "5", path_str(&c)]);
    assert_eq!(code(&out), 0);
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(code(&run(&["verify", "--bogus"])), 2);
    assert_eq!(code(&run(&["construct", "--family", "qr", "-p", "5"])), 2);
    assert_eq!(code(&run(&["verify", "-k", "5", "/nonexistent/x.grid"])), 2);
}

#[test]
fn unwritable_output_exits_2() {
    let out = run(&[
        "construct",
        "--family",
        "hypercube",
        "-p",
        "3",
        "-n",
        "2",
        "-o",
        "/nonexistent/dir/x.grid",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn every_subcommand_selftests() {
    for sub in [
        "construct",
        "verify",
        "search",
        "bounds",
        "certify",
        "rate",
        "product",
        "render",
    ] {
        let out = run(&[sub, "--selftest"]);
        assert_eq!(code(&out), 0, "{sub} selftest");
        assert_eq!(stdout(&out), format!("{sub} selftest: ok\n"));
    }
}
