use std::fs::File;
use std::path::Path;

use hvi_core::config::Config;
use hvi_core::harness::{exit_code_for, Harness, Overrides, Status};
use hvi_core::output::{read_aux, read_sweep, read_trace};
use hvi_core::par::Execution;
use hvi_core::problems::{ProblemParams, Registry};
use hvi_core::report::Report;
use hvi_core::solver::Variant;
use hvi_core::{CombinedData, HierarchicalProblem, OperatorSpec, ProxTerm};

fn harness(text: &str, dir: &Path) -> Harness {
    let mut cfg = Config::parse(text).unwrap();
    cfg.output.dir = dir.to_path_buf();
    Harness::new(cfg)
}

fn report_at(path: &Path) -> Report {
    Report::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every CSV the command wrote parses back with its schema.
fn parse_back(files: &[std::path::PathBuf]) {
    for f in files {
        let name = f.file_name().unwrap().to_str().unwrap();
        if name == "sweep.csv" {
            read_sweep(File::open(f).unwrap()).unwrap();
        } else if name.ends_with("_aux.csv") {
            read_aux(File::open(f).unwrap()).unwrap();
        } else if name.ends_with(".csv") {
            read_trace(File::open(f).unwrap()).unwrap();
        }
    }
}

const GNEP: &str = "[problem]\nname = \"gnep\"\n[solver]\niterations = 3000\nlog_every = 500\n";

#[test]
fn run_writes_consistent_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = harness(GNEP, dir.path()).cmd_run().unwrap();
    assert_eq!(out.status, Status::Ok);
    parse_back(&out.files);
    let trace = read_trace(File::open(dir.path().join("trace.csv")).unwrap()).unwrap();
    assert_eq!(
        trace.iter().map(|r| r.k).collect::<Vec<_>>(),
        vec![500, 1000, 1500, 2000, 2500, 3000]
    );
    let report = report_at(&dir.path().join("report.toml"));
    let run = &report.runs[0];
    let last = trace.last().unwrap();
    assert_eq!(run.feas_gap, last.feas_gap);
    assert_eq!(run.opt_gap, last.opt_gap);
    assert_eq!(run.dist_avg_to_solution, last.dist);
    assert_eq!(run.evals_f1, 3000);
    // config echo round-trips
    assert_eq!(
        Config::parse(&toml::to_string(&report.config).unwrap()).unwrap(),
        report.config
    );
    assert_eq!(report.config, out.report.config);
}

#[test]
fn zero_budget_gives_empty_trace_body() {
    let dir = tempfile::tempdir().unwrap();
    let out = harness("[problem]\nname = \"gnep\"\n[solver]\niterations = 0\n", dir.path())
        .cmd_run()
        .unwrap();
    assert_eq!(out.exit_code(), 0);
    let text = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(out.report.runs[0].z_final, vec![0.0, 10.0, 0.0, 0.0]);
}

#[test]
fn gave_run_writes_aux_monitor() {
    let dir = tempfile::tempdir().unwrap();
    let out = harness(
        "[problem]\nname = \"gave\"\n[solver]\niterations = 80000\nlog_every = 10000\n",
        dir.path(),
    )
    .cmd_run()
    .unwrap();
    parse_back(&out.files);
    let aux = read_aux(File::open(dir.path().join("trace_aux.csv")).unwrap()).unwrap();
    assert_eq!(aux.len(), 8);
    // decreasing once past the burn-in
    let late: Vec<f64> = aux.iter().filter(|(k, _)| *k >= 30_000).map(|a| a.1).collect();
    assert!(late.windows(2).all(|w| w[1] < w[0]), "{aux:?}");
    assert_eq!(out.report.runs[0].monitor_name.as_deref(), Some("ave_residual"));
}

#[test]
fn sweep_table_and_limiting_flag() {
    let dir = tempfile::tempdir().unwrap();
    let mut h = harness(GNEP, dir.path());
    h.config = Overrides {
        deltas: vec![0.5, 1.0],
        ..Overrides::default()
    }
    .apply(h.config)
    .unwrap();
    let out = h.cmd_sweep().unwrap();
    parse_back(&out.files);
    let rows = &out.report.sweep;
    assert_eq!(
        rows.iter().map(|r| (r.delta, r.limiting_case)).collect::<Vec<_>>(),
        vec![(0.5, false), (1.0, true)]
    );
    assert!(out.report.flags.limiting_case);
    let pts = read_sweep(File::open(dir.path().join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(pts.len(), 12);
}

#[test]
fn single_delta_sweep_matches_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = harness(GNEP, a.path()).cmd_run().unwrap();
    let sweep = harness(GNEP, b.path()).cmd_sweep().unwrap();
    let (r, s) = (&run.report.runs[0], &sweep.report.runs[0]);
    assert_eq!((&r.z_final, &r.z_avg, r.feas_gap), (&s.z_final, &s.z_avg, s.feas_gap));
    assert_eq!(
        std::fs::read(a.path().join("trace.csv")).unwrap(),
        std::fs::read(b.path().join("trace_delta_0.5.csv")).unwrap()
    );
}

#[test]
fn compare_counts_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let out = harness(
        "[problem]\nname = \"cross_toy\"\n[solver]\niterations = 20000\n",
        dir.path(),
    )
    .cmd_compare()
    .unwrap();
    parse_back(&out.files);
    let cmp = out.report.compare.as_ref().unwrap();
    assert!(cmp.eval_counts_ok);
    assert!(cmp.pairwise.iter().all(|p| p.final_dist < 1e-5));
    let times: Vec<f64> = out.report.runs.iter().map(|r| r.wall_time_s.unwrap()).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
    let korp = out
        .report
        .runs
        .iter()
        .find(|r| r.variant == Variant::Korpelevich)
        .unwrap();
    let oeg = out.report.runs.iter().find(|r| r.variant == Variant::Oeg).unwrap();
    assert_eq!(korp.evals_f1, 2 * oeg.evals_f1);
}

#[test]
fn check_report_is_seed_deterministic() {
    let text = "[problem]\nname = \"gnep\"\n[solver]\niterations = 1\n[check]\npairs = 40\nenergy_iterations = 300\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = harness(text, a.path())
        .with_execution(Execution::Parallel)
        .cmd_check()
        .unwrap();
    let mut hb = harness(text, a.path());
    hb.config.output.dir = b.path().to_path_buf();
    let rb = hb.with_execution(Execution::Sequential).cmd_check().unwrap();
    assert_eq!(ra.status, Status::Ok);
    assert_eq!(ra.report.checks, rb.report.checks);
    // Identical apart from the echoed output directory.
    let strip = |p: &Path| {
        std::fs::read_to_string(p.join("check_report.toml"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("dir ="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn check_flags_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[problem]\nname = \"abs_toy\"\n[solver]\niterations = 1\n[check]\npairs = 50\nenergy_iterations = 100\ninject_fault = \"prox_off_by_one\"\n";
    let out = harness(text, dir.path()).cmd_check().unwrap();
    assert_eq!(out.exit_code(), 1);
    assert!(out.report.failed_checks().any(|c| c.name == "prox_nonexpansive"));
}

#[test]
fn divergence_maps_to_exit_two_and_reports_last_finite() {
    let dir = tempfile::tempdir().unwrap();
    let mut h = harness(
        "[problem]\nname = \"runaway\"\n[solver]\niterations = 5000\nenergy = false\n",
        dir.path(),
    );
    let mut reg = Registry::empty();
    // Reported constants understate the operator, so the step is too long.
    reg.register("runaway", |_: &ProblemParams| {
        let f = OperatorSpec::from_fn("runaway", 1, 1.0, 0.0, |z| z * -3.0);
        let data = CombinedData::new(
            OperatorSpec::zero(1).with_lipschitz(1.0),
            f,
            ProxTerm::Zero,
            ProxTerm::Zero,
        )?;
        Ok(HierarchicalProblem::new("runaway", data))
    });
    h.registry = reg;
    h.config.solver.start = Some(vec![1.0]);
    let err = h.cmd_run().unwrap_err();
    assert_eq!(exit_code_for(&err), 2);
    let report = report_at(&dir.path().join("report.toml"));
    let div = report.divergence.unwrap();
    assert!(div.last_finite[0].is_finite() && div.last_finite[0].abs() <= 1e12);
}

#[test]
fn config_errors_map_to_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let err = harness("[problem]\nname = \"nope\"\n[solver]\niterations = 1\n", dir.path())
        .cmd_run()
        .unwrap_err();
    assert_eq!(exit_code_for(&err), 3);
    let err = harness(
        "[problem]\nname = \"gnep\"\n[solver]\niterations = 1\n[anchors]\nmode = \"explicit\"\nfeasibility = [[1.0, 2.0]]\noptimality = [[1.0, 2.0]]\n",
        dir.path(),
    )
    .cmd_run()
    .unwrap_err();
    assert_eq!(exit_code_for(&err), 3, "{err}");
}

#[test]
fn anchor_files_resolve_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("feas.txt"),
        "# y1 y2 y3 y4\n-50 15 50 35\n-50 30 50 20\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("opt.txt"), "-50 15 50 35\n").unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "[problem]\nname = \"gnep\"\n[solver]\niterations = 100\n[anchors]\nmode = \"explicit\"\nfeasibility_file = \"feas.txt\"\noptimality_file = \"opt.txt\"\n[output]\ndir = \"out\"\n",
    )
    .unwrap();
    let out = Harness::from_file(&cfg, &Overrides::default())
        .unwrap()
        .cmd_run()
        .unwrap();
    assert!(out.report.runs[0].feas_gap.is_some());
    assert!(dir.path().join("out/trace.csv").exists());
}
