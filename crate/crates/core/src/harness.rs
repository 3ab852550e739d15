//! The four harness commands behind the `hvi` binary.
//!
//! Exit codes: 0 success, 1 a check or eval-count assertion failed,
//! 2 divergence, 3 configuration or input error.

use std::path::{Path, PathBuf};

use crate::check::run_checks;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::gap::rate_slope;
use crate::linalg;
use crate::output::{self, SweepPoint};
use crate::par::{self, Execution};
use crate::problem::HierarchicalProblem;
use crate::problems::{ProblemParams, Registry};
use crate::report::{CompareReport, DivergenceReport, PairDistance, Report, RunReport, SweepRow};
use crate::schedule::{check_ac_sufficient, StepMode};
use crate::solver::{run, RunTrace, Variant};

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub iterations: Option<usize>,
    pub deltas: Vec<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    /// The effective config. A single `--delta` replaces `schedule.delta`;
    /// several replace the sweep list.
    pub fn apply(&self, mut cfg: Config) -> Result<Config> {
        if let Some(dir) = &self.out_dir {
            cfg.output.dir = dir.clone();
        }
        if let Some(k) = self.iterations {
            cfg.solver.iterations = k;
        }
        if let Some(s) = self.seed {
            cfg.check.seed = s;
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return Err(Error::config(format!("--delta must lie in (0, 1], got {d}")));
        }
        match self.deltas.as_slice() {
            [] => {}
            [d] => {
                cfg.schedule.delta = *d;
                cfg.sweep.deltas = vec![*d];
            }
            ds => cfg.sweep.deltas = ds.to_vec(),
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Violations,
}

#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub status: Status,
    pub report: Report,
    pub files: Vec<PathBuf>,
}

impl CommandOutput {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::Violations => 1,
        }
    }
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } => 2,
        _ => 3,
    }
}

/// Everything a command needs: effective config, where relative paths are
/// resolved from, the problem registry and the execution mode.
#[derive(Clone, Debug)]
pub struct Harness {
    pub config: Config,
    pub base_dir: PathBuf,
    pub registry: Registry,
    pub execution: Execution,
}

impl Harness {
    pub fn new(config: Config) -> Self {
        Self {
            config,
            base_dir: PathBuf::from("."),
            registry: Registry::with_builtins(),
            execution: Execution::default(),
        }
    }

    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let cfg = overrides.apply(Config::load(path)?)?;
        let mut h = Self::new(cfg);
        h.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(h)
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn problem(&self) -> Result<HierarchicalProblem> {
        self.registry.build(&self.config.problem)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.base_dir.join(&self.config.output.dir);
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn flags(&self, report: &mut Report, problem: &HierarchicalProblem, deltas: &[f64]) {
        let strong = self.config.schedule_params(problem).step_mode == StepMode::StrongMono;
        report.flags.limiting_case = !strong && deltas.contains(&1.0);
        if let Some(ws) = problem.weak_sharp {
            report.flags.weak_sharp_rho = Some(ws.rho);
            if !strong {
                report.flags.ac_sufficient = Some(deltas.iter().all(|&d| check_ac_sufficient(d, ws.rho)));
            }
        }
    }

    fn run_once(&self, problem: &HierarchicalProblem, delta: f64, variant: Variant) -> Result<RunTrace> {
        let mut cfg = self.config.clone();
        cfg.schedule.delta = delta;
        cfg.solver.variant = variant;
        let rc = cfg.run_config(problem, &self.base_dir, self.execution)?;
        run(problem, &rc)
    }

    fn run_report(&self, problem: &HierarchicalProblem, trace: &RunTrace, delta: Option<f64>) -> RunReport {
        let mut r = RunReport::from_trace(trace, delta, problem.monitor.as_ref().map(|m| m.name.clone()));
        let [lo, hi] = self.config.output.slope_range;
        let ks: Vec<f64> = trace.records.iter().map(|r| r.k as f64).collect();
        let fit = |vals: Vec<Option<f64>>| -> Option<f64> {
            if vals.iter().any(Option::is_none) {
                return None;
            }
            let vals: Vec<f64> = vals.into_iter().flatten().collect();
            rate_slope(&ks, &vals, (lo, hi))
                .map_err(|e| log::info!("no slope for {}: {e}", trace.variant))
                .ok()
        };
        r.feas_slope = fit(trace.records.iter().map(|r| r.feas_gap).collect());
        r.opt_slope = fit(trace.records.iter().map(|r| r.opt_gap).collect());
        r
    }

    fn write_trace_files(
        &self,
        dir: &Path,
        stem: &str,
        problem: &HierarchicalProblem,
        trace: &RunTrace,
    ) -> Result<Vec<PathBuf>> {
        let path = dir.join(format!("{stem}.csv"));
        output::to_file(&path, |w| output::write_trace(w, &trace.records))?;
        let mut files = vec![path];
        if let Some(m) = &problem.monitor {
            let aux = dir.join(format!("{stem}_aux.csv"));
            output::to_file(&aux, |w| output::write_aux(w, &m.name, &trace.records))?;
            files.push(aux);
        }
        Ok(files)
    }

    fn finish(
        &self,
        dir: &Path,
        name: &str,
        report: Report,
        mut files: Vec<PathBuf>,
        status: Status,
    ) -> Result<CommandOutput> {
        let path = dir.join(name);
        report.write(&path)?;
        files.push(path);
        Ok(CommandOutput { status, report, files })
    }

    /// Write a report describing a divergence, then hand the error back.
    fn diverged(&self, dir: &Path, mut report: Report, err: Error) -> Error {
        if let Error::Divergence { k, reason, last_finite } = &err {
            report.divergence = Some(DivergenceReport {
                k: *k,
                reason: reason.clone(),
                last_finite: last_finite.iter().copied().collect(),
            });
            if let Err(e) = report.write(&dir.join("report.toml")) {
                log::error!("could not write divergence report: {e}");
            }
        }
        err
    }

    pub fn cmd_run(&self) -> Result<CommandOutput> {
        let problem = self.problem()?;
        let dir = self.out_dir()?;
        let delta = self.config.schedule.delta;
        let mut report = Report::new("run", self.config.clone());
        self.flags(&mut report, &problem, &[delta]);
        let trace = match self.run_once(&problem, delta, self.config.solver.variant) {
            Ok(t) => t,
            Err(e) => return Err(self.diverged(&dir, report, e)),
        };
        let files = self.write_trace_files(&dir, "trace", &problem, &trace)?;
        let mut rr = self.run_report(&problem, &trace, Some(delta));
        rr.trace_file = Some("trace.csv".into());
        report.runs.push(rr);
        self.finish(&dir, "report.toml", report, files, Status::Ok)
    }

    /// Deltas come from the overrides, then `[sweep] deltas`, then the
    /// single `schedule.delta`.
    pub fn cmd_sweep(&self) -> Result<CommandOutput> {
        let deltas = match self.config.sweep.deltas.as_slice() {
            [] => vec![self.config.schedule.delta],
            ds => ds.to_vec(),
        };
        if self.config.solver.variant == Variant::SmOeg {
            return Err(Error::config("sweep varies delta, which sm_oeg does not use"));
        }
        let problem = self.problem()?;
        let dir = self.out_dir()?;
        let mut report = Report::new("sweep", self.config.clone());
        self.flags(&mut report, &problem, &deltas);
        let results = par::map(self.execution, &deltas, |&d| {
            self.run_once(&problem, d, self.config.solver.variant)
        });
        let mut files = Vec::new();
        let mut points = Vec::new();
        for (&d, res) in deltas.iter().zip(results) {
            let trace = match res {
                Ok(t) => t,
                Err(e) => return Err(self.diverged(&dir, report, e)),
            };
            let stem = format!("trace_delta_{d}");
            files.extend(self.write_trace_files(&dir, &stem, &problem, &trace)?);
            points.extend(trace.records.iter().map(|r| SweepPoint {
                delta: d,
                k: r.k,
                feas_gap: r.feas_gap,
                opt_gap: r.opt_gap,
                dist: r.dist,
            }));
            let mut rr = self.run_report(&problem, &trace, Some(d));
            rr.trace_file = Some(format!("{stem}.csv"));
            report.sweep.push(SweepRow {
                delta: d,
                limiting_case: d == 1.0,
                ac_sufficient: problem.weak_sharp.map(|w| check_ac_sufficient(d, w.rho)),
                feas_slope: rr.feas_slope,
                opt_slope: rr.opt_slope,
                dist_avg_to_solution: rr.dist_avg_to_solution,
                dist_final_to_lower: rr.dist_final_to_lower,
            });
            report.runs.push(rr);
        }
        let sweep_path = dir.join("sweep.csv");
        output::to_file(&sweep_path, |w| output::write_sweep(w, &points))?;
        files.push(sweep_path);
        self.finish(&dir, "report.toml", report, files, Status::Ok)
    }

    /// OEG, Tseng and Korpelevich on the same schedule.
    pub fn cmd_compare(&self) -> Result<CommandOutput> {
        if self.config.solver.variant == Variant::SmOeg {
            return Err(Error::config(
                "compare runs the constant-step variants; sm_oeg is not comparable",
            ));
        }
        let variants = [Variant::Oeg, Variant::Tseng, Variant::Korpelevich];
        let problem = self.problem()?;
        let dir = self.out_dir()?;
        let delta = self.config.schedule.delta;
        let mut report = Report::new("compare", self.config.clone());
        self.flags(&mut report, &problem, &[delta]);
        let results = par::map(self.execution, &variants, |&v| self.run_once(&problem, delta, v));
        let mut traces = Vec::new();
        for res in results {
            match res {
                Ok(t) => traces.push(t),
                Err(e) => return Err(self.diverged(&dir, report, e)),
            }
        }
        let mut files = Vec::new();
        let mut eval_counts_ok = true;
        for t in &traces {
            let stem = format!("trace_{}", t.variant);
            files.extend(self.write_trace_files(&dir, &stem, &problem, t)?);
            let expected = t.variant.evals_per_iteration() * t.summary.iterations as u64;
            let ev = t.summary.evals;
            if ev.f1 != expected || ev.f2 != expected {
                log::error!(
                    "{}: expected {expected} evaluations of each operator, got F1 {} / F2 {}",
                    t.variant,
                    ev.f1,
                    ev.f2
                );
                eval_counts_ok = false;
            }
        }
        let mut pairwise = Vec::new();
        for i in 0..traces.len() {
            for j in i + 1..traces.len() {
                let (a, b) = (&traces[i].summary, &traces[j].summary);
                pairwise.push(PairDistance {
                    a: traces[i].variant,
                    b: traces[j].variant,
                    final_dist: linalg::dist(&a.z_final, &b.z_final),
                    avg_dist: linalg::dist(&a.z_avg, &b.z_avg),
                });
            }
        }
        traces.sort_by_key(|t| t.summary.wall_time);
        for t in &traces {
            let mut rr = self.run_report(&problem, t, Some(delta));
            rr.trace_file = Some(format!("trace_{}.csv", t.variant));
            report.runs.push(rr);
        }
        report.compare = Some(CompareReport {
            order: traces.iter().map(|t| t.variant).collect(),
            eval_counts_ok,
            pairwise,
        });
        let status = if eval_counts_ok { Status::Ok } else { Status::Violations };
        self.finish(&dir, "report.toml", report, files, status)
    }

    /// The invariant suite on every registered problem with default
    /// parameters, plus the configured problem when it differs.
    pub fn cmd_check(&self) -> Result<CommandOutput> {
        let mut problems = Vec::new();
        for name in self.registry.names() {
            problems.push(self.registry.build(&ProblemParams::named(name))?);
        }
        if self.config.problem != ProblemParams::named(&self.config.problem.name) {
            let mut p = self.problem()?;
            p.name = format!("{}(configured)", p.name);
            problems.push(p);
        } else {
            // Fail early on an unknown name.
            self.problem()?;
        }
        let dir = self.out_dir()?;
        let mut report = Report::new("check", self.config.clone());
        report.checks = run_checks(&problems, &self.config.check, self.execution);
        for c in report.failed_checks() {
            log::error!(
                "check {} failed on {}: {} of {} violated (worst {:e}) {}",
                c.name,
                c.target,
                c.violations,
                c.checked,
                c.worst,
                c.detail
            );
        }
        let status = if report.failed_checks().next().is_some() {
            Status::Violations
        } else {
            Status::Ok
        };
        self.finish(&dir, "check_report.toml", report, Vec::new(), status)
    }
}
