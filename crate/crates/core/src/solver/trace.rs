use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::gap::PreparedGap;
use crate::linalg::{self, Vector};
use crate::par::Execution;
use crate::problem::HierarchicalProblem;
use crate::schedule::ScheduleParams;

use super::{EvalCounts, Solver, Variant};

/// Composite stop rule: stop once `‖z^{k+1/2} − z^k‖ ≤ tol_step` and, when
/// anchors are configured, both gaps at the average are `≤ tol_gap`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub tol_step: f64,
    pub tol_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapAnchors {
    pub feasibility: Vec<Vector>,
    pub optimality: Vec<Vector>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum EnergyReference {
    /// Disable energy diagnostics.
    None,
    /// Use the problem's known solution when it has one.
    #[default]
    Solution,
    Point(Vector),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub variant: Variant,
    pub schedule: ScheduleParams,
    pub iterations: usize,
    pub start: Option<Vector>,
    /// Log every `log_every` iterations (0: only the last one).
    pub log_every: usize,
    /// Additionally log about this many geometrically spaced iterations per
    /// decade (0: off). Useful for rate fits.
    pub log_per_decade: usize,
    pub stop: Option<StopRule>,
    pub anchors: Option<GapAnchors>,
    pub energy_reference: EnergyReference,
    /// Used to prepare anchor evaluations.
    pub execution: Execution,
}

impl RunConfig {
    pub fn new(variant: Variant, schedule: ScheduleParams, iterations: usize) -> Self {
        Self {
            variant,
            schedule,
            iterations,
            start: None,
            log_every: 1000,
            log_per_decade: 0,
            stop: None,
            anchors: None,
            energy_reference: EnergyReference::Solution,
            execution: Execution::Sequential,
        }
    }

    fn log_points(&self) -> BTreeSet<usize> {
        let mut pts = BTreeSet::new();
        if self.log_per_decade > 0 && self.iterations > 0 {
            let top = (self.iterations as f64).log10();
            let n = (top * self.log_per_decade as f64).ceil() as usize;
            for j in 0..=n {
                let k = 10f64.powf(j as f64 / self.log_per_decade as f64).round() as usize;
                if (1..=self.iterations).contains(&k) {
                    pts.insert(k);
                }
            }
        }
        pts
    }
}

/// One trace row, written after iteration `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub t: f64,
    pub sigma: f64,
    pub step_norm: f64,
    pub feas_gap: Option<f64>,
    pub opt_gap: Option<f64>,
    /// `‖z̄^k − z*‖` when a solution is known, otherwise the distance of
    /// `z̄^k` to the lower set when it has a descriptor.
    pub dist: Option<f64>,
    pub e: Option<f64>,
    pub d: Option<f64>,
    pub w: Option<f64>,
    pub resid: Option<f64>,
    /// Problem monitor at `(z^{k+1}, σ_k)`.
    pub aux: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub z_final: Vector,
    pub z_avg: Vector,
    pub iterations: usize,
    pub wall_time: Duration,
    pub evals: EvalCounts,
    pub stopped_early: bool,
    pub feas_gap: Option<f64>,
    pub opt_gap: Option<f64>,
    pub dist_avg_to_solution: Option<f64>,
    pub dist_final_to_lower: Option<f64>,
    pub dist_avg_to_lower: Option<f64>,
    /// `E_1`.
    pub energy_initial: Option<f64>,
    /// Largest recursion residual over all iterations, logged or not.
    pub max_resid: Option<f64>,
    /// `max_k (−Φ1)` over the run (`sm_oeg` only).
    pub strong_c: Option<f64>,
    pub monitor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub problem: String,
    pub variant: Variant,
    pub records: Vec<TraceRecord>,
    pub summary: RunSummary,
}

fn nan_max(acc: Option<f64>, v: f64) -> Option<f64> {
    Some(acc.map_or(v, |a| a.max(v)))
}

pub fn run(problem: &HierarchicalProblem, config: &RunConfig) -> Result<RunTrace> {
    let started = Instant::now();
    let mut solver = Solver::new(problem, config.variant, config.schedule, config.start.clone())?;
    let reference = match &config.energy_reference {
        EnergyReference::None => None,
        EnergyReference::Solution => problem.solution().cloned(),
        EnergyReference::Point(p) => Some(p.clone()),
    };
    let mut energy_initial = None;
    if let Some(z_ref) = reference {
        if problem.data.in_domain(&z_ref) {
            solver = solver.with_energy_reference(z_ref)?;
            energy_initial = solver.energy_state().map(|(e, _)| e);
        } else if matches!(config.energy_reference, EnergyReference::Point(_)) {
            return Err(Error::Domain("energy reference lies outside dom(g1) ∩ dom(g2)".into()));
        } else {
            log::info!("known solution lies outside dom(g1) ∩ dom(g2); energy diagnostics disabled");
        }
    }

    let gaps = match &config.anchors {
        Some(a) => Some((
            PreparedGap::feasibility(config.execution, problem, &a.feasibility)?,
            PreparedGap::optimality(config.execution, problem, &a.optimality)?,
        )),
        None => None,
    };
    let gap_at = |z: &Vector| gaps.as_ref().map(|(f, o)| (f.eval(z), o.eval(z)));
    let dist_of = |z: &Vector| match (problem.solution(), problem.lower_set()) {
        (Some(s), _) => Some(linalg::dist(z, s)),
        (None, Some(set)) => Some(set.dist(z)),
        _ => None,
    };

    let log_points = config.log_points();
    let mut records = Vec::new();
    let mut max_resid: Option<f64> = None;
    let mut strong_c: Option<f64> = None;
    let mut stopped_early = false;

    for k in 1..=config.iterations {
        let info = solver.step()?;
        if let Some(en) = &info.energy {
            if let Some(r) = en.resid {
                max_resid = nan_max(max_resid, r);
            }
            if let Some(p1) = en.phi1 {
                strong_c = nan_max(strong_c, -p1);
            }
        }
        let mut stop_now = false;
        let mut gap_cache = None;
        if let Some(rule) = &config.stop {
            if info.step_norm <= rule.tol_step {
                let avg = solver.average();
                gap_cache = gap_at(&avg);
                stop_now = gap_cache.is_none_or(|(f, o)| f <= rule.tol_gap && o <= rule.tol_gap);
            }
        }
        let logged = k == config.iterations
            || stop_now
            || (config.log_every > 0 && k % config.log_every == 0)
            || log_points.contains(&k);
        if logged {
            let avg = solver.average();
            let g = gap_cache.or_else(|| gap_at(&avg));
            let en = info.energy.as_ref();
            records.push(TraceRecord {
                k,
                t: info.t,
                sigma: info.sigma,
                step_norm: info.step_norm,
                feas_gap: g.map(|x| x.0),
                opt_gap: g.map(|x| x.1),
                dist: dist_of(&avg),
                e: en.map(|e| e.e),
                d: en.and_then(|e| e.d),
                w: en.and_then(|e| e.w),
                resid: en.and_then(|e| e.resid),
                aux: problem.monitor.as_ref().map(|m| m.eval(solver.z(), info.sigma)),
            });
        }
        if stop_now {
            stopped_early = true;
            log::info!("stop rule met at k = {k}");
            break;
        }
    }

    let z_avg = solver.average();
    let g = gap_at(&z_avg);
    let lower = problem.lower_set();
    let summary = RunSummary {
        z_final: solver.z().clone(),
        iterations: solver.k(),
        wall_time: started.elapsed(),
        evals: solver.evals(),
        stopped_early,
        feas_gap: g.map(|x| x.0),
        opt_gap: g.map(|x| x.1),
        dist_avg_to_solution: problem.solution().map(|s| linalg::dist(&z_avg, s)),
        dist_final_to_lower: lower.map(|l| l.dist(solver.z())),
        dist_avg_to_lower: lower.map(|l| l.dist(&z_avg)),
        energy_initial,
        max_resid,
        strong_c,
        monitor: match (&problem.monitor, solver.sigma()) {
            (Some(m), Some(s)) => Some(m.eval(solver.z(), s)),
            _ => None,
        },
        z_avg,
    };
    Ok(RunTrace {
        problem: problem.name.clone(),
        variant: config.variant,
        records,
        summary,
    })
}
