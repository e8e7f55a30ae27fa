//! End-to-end tests of the command line tool.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn sknap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sknap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn gen(dir: &Path, family: &str, n: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("{family}-{n}-{seed}.json"));
    let out = sknap(&[
        "gen",
        "--family",
        family,
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_str(&stdout(out)).unwrap()
}

#[test]
fn gen_is_deterministic() {
    let a = sknap(&["gen", "--family", "bernoulli", "--n", "10", "--seed", "7"]);
    let b = sknap(&["gen", "--family", "bernoulli", "--n", "10", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).ends_with('\n'));
}

#[test]
fn auto_picks_bernoulli() {
    let dir = TempDir::new().unwrap();
    let path = gen(dir.path(), "bernoulli", 6, 1);
    let sol = json(&sknap(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "--epsilon",
        "0.2",
    ]));
    assert_eq!(sol["scheme"], "bernoulli");
}

#[test]
fn auto_picks_ksupport_and_hyper() {
    let dir = TempDir::new().unwrap();
    let ks = gen(dir.path(), "ksupport", 5, 2);
    let sol = json(&sknap(&[
        "solve",
        "--instance",
        ks.to_str().unwrap(),
        "--epsilon",
        "0.3",
    ]));
    assert_eq!(sol["scheme"], "ksupport");
    let hy = gen(dir.path(), "hyper", 4, 2);
    let sol = json(&sknap(&[
        "solve",
        "--instance",
        hy.to_str().unwrap(),
        "--epsilon",
        "1/4",
    ]));
    assert_eq!(sol["scheme"], "hyper");
}

#[test]
fn scheme_mismatch_exits_1() {
    let dir = TempDir::new().unwrap();
    let path = gen(dir.path(), "hyper", 4, 3);
    let out = sknap(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "--scheme",
        "bernoulli",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("item 0"));
}

#[test]
fn invalid_input_exits_1() {
    let dir = TempDir::new().unwrap();
    let path = gen(dir.path(), "bernoulli", 4, 3);
    let out = sknap(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "--epsilon",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"items": [], "capacity": "1", "p": "2"}"#).unwrap();
    assert_eq!(
        sknap(&["solve", "--instance", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        sknap(&["solve", "--instance", "/nonexistent.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(sknap(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn budget_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let path = gen(dir.path(), "hyper", 6, 4);
    let p = path.to_str().unwrap();
    let out = sknap(&[
        "solve",
        "--instance",
        p,
        "--scheme",
        "hyper",
        "--type-budget",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
    let out = sknap(&["brute", "--instance", p, "--brute-cap", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

fn without_wall_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_ms");
    v
}

#[test]
fn fixed_seed_is_reproducible() {
    let dir = TempDir::new().unwrap();
    for family in ["bernoulli", "hyper"] {
        let path = gen(dir.path(), family, 5, 5);
        let args = [
            "solve",
            "--instance",
            path.to_str().unwrap(),
            "--epsilon",
            "0.25",
            "--seed",
            "11",
        ];
        let a = without_wall_time(json(&sknap(&args)));
        let b = without_wall_time(json(&sknap(&args)));
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let path = gen(dir.path(), "deterministic", 6, 1);
    let out_path = dir.path().join("sol.json");
    let out = sknap(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let file = sknap::instance::InstanceFile::load(&path).unwrap();
    sknap::cli::check_solution(&file.instance().unwrap(), &text).unwrap();
}

#[test]
fn estimate_of_empty_set_follows_capacity_sign() {
    let dir = TempDir::new().unwrap();
    for (cap, expected) in [("-1/2", 1.0), ("0", 0.0), ("3", 0.0)] {
        let path = dir.path().join("inst.json");
        let text = format!(
            r#"{{"items": [{{"dist": {{"type": "gaussian", "mean": 1, "var": 1}}, "profit": "1"}}], "capacity": "{cap}", "p": "0.1"}}"#
        );
        std::fs::write(&path, text).unwrap();
        let est = json(&sknap(&[
            "estimate",
            "--instance",
            path.to_str().unwrap(),
            "--subset",
            "",
        ]));
        assert_eq!(est["point_estimate"].as_f64().unwrap(), expected);
    }
}

#[test]
fn check_hyper_reports_laplace_kurtosis() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("lap.json");
    std::fs::write(
        &path,
        r#"{"items": [{"dist": {"type": "laplace", "location": 2, "scale": 0.5}, "profit": "3"}], "capacity": "4", "p": "1/10"}"#,
    )
    .unwrap();
    let report = json(&sknap(&[
        "check-hyper",
        "--instance",
        path.to_str().unwrap(),
    ]));
    let k = report["items"][0]["kurtosis"].as_f64().unwrap();
    assert!((k - 6.0).abs() < 1e-12);
    assert!((report["c"].as_f64().unwrap() - 6f64.powf(0.25)).abs() < 1e-12);
}

#[test]
fn solve_then_estimate_agree() {
    let dir = TempDir::new().unwrap();
    let path = gen(dir.path(), "hyper", 5, 9);
    let p = path.to_str().unwrap();
    let sol = json(&sknap(&["solve", "--instance", p, "--epsilon", "0.25"]));
    let subset: Vec<String> = sol["selected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.to_string())
        .collect();
    let est = json(&sknap(&[
        "estimate",
        "--instance",
        p,
        "--subset",
        &subset.join(","),
        "--samples",
        "200000",
        "--seed",
        "99",
    ]));
    let a = sol["overflow"]["estimate"].as_f64().unwrap();
    let ha = sol["overflow"]["half_width"].as_f64().unwrap();
    let b = est["point_estimate"].as_f64().unwrap();
    let hb = est["half_width"].as_f64().unwrap();
    assert!((a - b).abs() <= ha + hb, "{a} vs {b}");
}

#[test]
fn brute_and_exact_estimate_agree() {
    let dir = TempDir::new().unwrap();
    let path = gen(dir.path(), "finite", 6, 2);
    let p = path.to_str().unwrap();
    let best = json(&sknap(&["brute", "--instance", p]));
    let subset: Vec<String> = best["selected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.to_string())
        .collect();
    let est = json(&sknap(&[
        "estimate",
        "--instance",
        p,
        "--subset",
        &subset.join(","),
        "--exact",
    ]));
    assert_eq!(est["point_estimate"], best["overflow"]["estimate"]);
}

#[test]
fn selftest_succeeds() {
    let out = sknap(&["selftest"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn help_exits_0() {
    let out = sknap(&["--help"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("solve"));
}
