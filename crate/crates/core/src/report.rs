//! TOML run reports. The `[config]` table echoes the effective
//! configuration and parses back into an equal [`Config`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::solver::{RunTrace, Variant};

pub const REPORT_FORMAT: &str = "hvi-report v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub command: String,
    pub flags: Flags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckOutcome>,
    pub config: Config,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    /// Some run used `δ = 1`, where the rate guarantees degenerate.
    pub limiting_case: bool,
    /// Declared weak-sharpness exponent of the lower level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_sharp_rho: Option<f64>,
    /// `1 > δ > 1 − 1/ρ` for every δ used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ac_sufficient: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub k: usize,
    pub reason: String,
    pub last_finite: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub iterations: usize,
    pub stopped_early: bool,
    /// Omitted from check reports so they are reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    pub evals_f1: u64,
    pub evals_f2: u64,
    pub init_evals_f1: u64,
    pub init_evals_f2: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feas_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feas_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_avg_to_solution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_final_to_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_avg_to_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_initial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_energy_resid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
    pub z_final: Vec<f64>,
    pub z_avg: Vec<f64>,
}

impl RunReport {
    pub fn from_trace(trace: &RunTrace, delta: Option<f64>, monitor_name: Option<String>) -> Self {
        let s = &trace.summary;
        Self {
            problem: trace.problem.clone(),
            variant: trace.variant,
            delta,
            iterations: s.iterations,
            stopped_early: s.stopped_early,
            wall_time_s: Some(s.wall_time.as_secs_f64()),
            evals_f1: s.evals.f1,
            evals_f2: s.evals.f2,
            init_evals_f1: s.evals.init_f1,
            init_evals_f2: s.evals.init_f2,
            feas_gap: s.feas_gap,
            opt_gap: s.opt_gap,
            feas_slope: None,
            opt_slope: None,
            dist_avg_to_solution: s.dist_avg_to_solution,
            dist_final_to_lower: s.dist_final_to_lower,
            dist_avg_to_lower: s.dist_avg_to_lower,
            energy_initial: s.energy_initial,
            max_energy_resid: s.max_resid,
            strong_c: s.strong_c,
            monitor: s.monitor,
            monitor_name: s.monitor.and(monitor_name),
            trace_file: None,
            z_final: s.z_final.iter().copied().collect(),
            z_avg: s.z_avg.iter().copied().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub limiting_case: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ac_sufficient: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feas_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_avg_to_solution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_final_to_lower: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub a: Variant,
    pub b: Variant,
    pub final_dist: f64,
    pub avg_dist: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// Variants from fastest to slowest wall time.
    pub order: Vec<Variant>,
    /// Every variant used exactly its nominal number of operator
    /// evaluations per iteration.
    pub eval_counts_ok: bool,
    pub pairwise: Vec<PairDistance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub target: String,
    pub passed: bool,
    pub checked: usize,
    pub violations: usize,
    /// Largest violation margin seen (0 when none).
    pub worst: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Report {
    pub fn new(command: &str, config: Config) -> Self {
        Self {
            format: REPORT_FORMAT.to_string(),
            command: command.to_string(),
            flags: Flags::default(),
            divergence: None,
            runs: Vec::new(),
            sweep: Vec::new(),
            compare: None,
            checks: Vec::new(),
            config,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize report: {e}")))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let r: Report = toml::from_str(text).map_err(|e| Error::config(format!("bad report: {}", e.message())))?;
        if r.format != REPORT_FORMAT {
            return Err(Error::config(format!("unsupported report format '{}'", r.format)));
        }
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip() {
        let cfg = Config::parse("[problem]\nname = \"gnep\"\n[solver]\niterations = 10\n").unwrap();
        let mut r = Report::new("run", cfg);
        r.flags.weak_sharp_rho = Some(2.0);
        r.flags.ac_sufficient = Some(true);
        r.checks.push(CheckOutcome {
            name: "prox_nonexpansive".into(),
            target: "gnep.g2".into(),
            passed: true,
            checked: 200,
            violations: 0,
            worst: 0.0,
            detail: String::new(),
        });
        r.sweep.push(SweepRow {
            delta: 1.0,
            limiting_case: true,
            ac_sufficient: None,
            feas_slope: Some(-0.5),
            opt_slope: None,
            dist_avg_to_solution: Some(f64::INFINITY),
            dist_final_to_lower: None,
        });
        let text = r.to_toml().unwrap();
        let back = Report::parse(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(
            Config::parse(&toml::to_string(&back.config).unwrap()).unwrap(),
            r.config
        );
    }
}
