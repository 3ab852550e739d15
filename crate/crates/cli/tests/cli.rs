use std::path::Path;
use std::process::{Command, Output};

fn hvi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_succeeds_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.toml",
        "[problem]\nname = \"gnep\"\n[solver]\niterations = 100000\nlog_every = 10\n",
    );
    let out = dir.path().join("o");
    let o = hvi(&[
        "run",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--k",
        "40",
        "--delta",
        "0.7",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(out.join("report.toml")).unwrap();
    assert!(report.contains("iterations = 40"));
    assert!(report.contains("delta = 0.7"));
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("# hvi-trace v1\n"));
    assert_eq!(trace.lines().count(), 2 + 4);
}

#[test]
fn zero_budget_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.toml",
        "[problem]\nname = \"gnep\"\n[solver]\niterations = 0\n",
    );
    let o = hvi(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn malformed_config_exits_three_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[problem]\nname = \"gnep\"\n\n[solver]\niterations = \"many\"\n",
    );
    let o = hvi(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
    let o = hvi(&["run", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn divergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "d.toml",
        "[problem]\nname = \"cross_toy\"\n[solver]\niterations = 10\nstart = [1e13]\n",
    );
    let o = hvi(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
}

#[test]
fn check_suite_and_fault_injection() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[problem]\nname = \"gnep\"\n[solver]\niterations = 1\n[check]\npairs = 60\nenergy_iterations = 300\n";
    let ok = write(dir.path(), "c.toml", base);
    let out = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let a = hvi(&["check", &ok, "--out", &out("a"), "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = hvi(&["check", &ok, "--out", &out("b"), "--seed", "7", "--sequential"]);
    assert_eq!(b.status.code(), Some(0));
    let read = |d: &str| {
        std::fs::read_to_string(dir.path().join(d).join("check_report.toml"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("dir ="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(read("a"), read("b"));
    assert!(read("a").contains("seed = 7"));

    let bad = write(
        dir.path(),
        "f.toml",
        &format!("{base}inject_fault = \"prox_off_by_one\"\n"),
    );
    let f = hvi(&["check", &bad, "--out", &out("f")]);
    assert_eq!(f.status.code(), Some(1));
    assert!(stderr(&f).contains("prox_nonexpansive"), "{}", stderr(&f));
}

#[test]
fn sweep_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.toml",
        "[problem]\nname = \"cross_toy\"\n[solver]\niterations = 2000\nlog_every = 500\n",
    );
    let s = hvi(&[
        "sweep",
        &cfg,
        "--out",
        dir.path().join("s").to_str().unwrap(),
        "--delta",
        "0.3,0.5,1",
    ]);
    assert_eq!(s.status.code(), Some(0), "{}", stderr(&s));
    let report = std::fs::read_to_string(dir.path().join("s/report.toml")).unwrap();
    assert_eq!(report.matches("[[sweep]]").count(), 3);
    assert!(report.contains("limiting_case = true"));
    let c = hvi(&["compare", &cfg, "--out", dir.path().join("c").to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0), "{}", stderr(&c));
    let report = std::fs::read_to_string(dir.path().join("c/report.toml")).unwrap();
    assert!(report.contains("eval_counts_ok = true"));
}
