//! Experiment configuration (TOML).
//!
//! ```toml
//! [problem]
//! name = "gnep"
//!
//! [solver]
//! variant = "oeg"
//! iterations = 200000
//! log_every = 1000
//!
//! [schedule]
//! a = 1.0
//! b = 3.0
//! delta = 0.5
//! ```
//!
//! Unknown keys are rejected. Parse and validation errors carry the line of
//! the offending key when it can be located.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap::{default_anchors, AnchorLabel, AnchorSet};
use crate::linalg::Vector;
use crate::par::Execution;
use crate::problem::HierarchicalProblem;
use crate::problems::ProblemParams;
use crate::schedule::{ScheduleParams, StepMode};
use crate::solver::{EnergyReference, GapAnchors, RunConfig, StopRule, Variant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemParams,
    pub solver: SolverSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub anchors: AnchorSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub check: CheckSection,
}

fn default_log_every() -> usize {
    1000
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_variant")]
    pub variant: Variant,
    pub iterations: usize,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default)]
    pub log_per_decade: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_tol_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_tol_gap: Option<f64>,
    /// Track energy diagnostics against the known solution.
    #[serde(default = "yes")]
    pub energy: bool,
}

fn default_variant() -> Variant {
    Variant::Oeg
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "three")]
    pub b: f64,
    #[serde(default = "half")]
    pub delta: f64,
    /// Defaults to `strong_mono` for `sm_oeg`, `constant_monotone` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_mode: Option<StepMode>,
    /// Defaults to the declared modulus of F1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_t: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn half() -> f64 {
    0.5
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 3.0,
            delta: 0.5,
            step_mode: None,
            mu: None,
            explicit_t: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AnchorMode {
    /// Built from the lower-set descriptor when the problem has one.
    #[default]
    Default,
    None,
    /// Taken from `feasibility`/`optimality` (inline) or the `*_file` keys.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AnchorSection {
    #[serde(default)]
    pub mode: AnchorMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimality: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimality_file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_slope_range")]
    pub slope_range: [f64; 2],
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_slope_range() -> [f64; 2] {
    [1e3, 1e5]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            slope_range: default_slope_range(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// A clamp that returns `hi + 1` above the box.
    ProxOffByOne,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Random pairs per prox/operator property.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Iterations of each energy-recursion run.
    #[serde(default = "default_energy_iters")]
    pub energy_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject_fault: Option<Fault>,
}

fn default_seed() -> u64 {
    42
}
fn default_pairs() -> usize {
    200
}
fn default_energy_iters() -> usize {
    2000
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            pairs: default_pairs(),
            energy_iterations: default_energy_iters(),
            inject_fault: None,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first `key =` assignment, for validation messages.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let msg = e.message().trim().to_string();
            match e.span() {
                Some(span) => Error::config(format!("line {}: {msg}", line_of(text, span.start))),
                None => Error::config(msg),
            }
        })?;
        cfg.validate().map_err(|(key, msg)| match key_line(text, key) {
            Some(line) => Error::config(format!("line {line}: {key}: {msg}")),
            None => Error::config(format!("{key}: {msg}")),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let s = &self.schedule;
        if !(s.a > 0.0) {
            return Err(("a", format!("must be positive, got {}", s.a)));
        }
        if !(s.b > 0.0) {
            return Err(("b", format!("must be positive, got {}", s.b)));
        }
        if !(s.delta > 0.0 && s.delta <= 1.0) {
            return Err(("delta", format!("must lie in (0, 1], got {}", s.delta)));
        }
        if let Some(mu) = s.mu {
            if !(mu >= 0.0) {
                return Err(("mu", format!("must be nonnegative, got {mu}")));
            }
        }
        if let Some(t) = s.explicit_t {
            if !(t > 0.0) {
                return Err(("explicit_t", format!("must be positive, got {t}")));
            }
        }
        if self.solver.variant == Variant::SmOeg && s.step_mode == Some(StepMode::ConstantMonotone) {
            return Err(("step_mode", "sm_oeg needs strong_mono".into()));
        }
        if self.solver.variant != Variant::SmOeg && s.step_mode == Some(StepMode::StrongMono) {
            return Err((
                "step_mode",
                "strong_mono is only valid with variant = \"sm_oeg\"".into(),
            ));
        }
        for (key, v) in [
            ("stop_tol_step", self.solver.stop_tol_step),
            ("stop_tol_gap", self.solver.stop_tol_gap),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) {
                    return Err((key, format!("must be nonnegative, got {v}")));
                }
            }
        }
        if let Some(d) = self.sweep.deltas.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return Err(("deltas", format!("every delta must lie in (0, 1], got {d}")));
        }
        let [lo, hi] = self.output.slope_range;
        if !(lo > 0.0 && lo < hi) {
            return Err(("slope_range", format!("needs 0 < lo < hi, got [{lo}, {hi}]")));
        }
        let a = &self.anchors;
        let explicit = a.feasibility.is_some()
            || a.optimality.is_some()
            || a.feasibility_file.is_some()
            || a.optimality_file.is_some();
        match a.mode {
            AnchorMode::Explicit => {
                if a.feasibility.is_some() == a.feasibility_file.is_some() {
                    return Err((
                        "mode",
                        "explicit anchors need exactly one of feasibility, feasibility_file".into(),
                    ));
                }
                if a.optimality.is_some() == a.optimality_file.is_some() {
                    return Err((
                        "mode",
                        "explicit anchors need exactly one of optimality, optimality_file".into(),
                    ));
                }
            }
            _ if explicit => {
                return Err(("mode", "anchor points given but mode is not \"explicit\"".into()));
            }
            _ => {}
        }
        if self.check.pairs == 0 {
            return Err(("pairs", "must be at least 1".into()));
        }
        Ok(())
    }

    /// Schedule parameters with Lipschitz constants and μ taken from the
    /// problem where the config leaves them open.
    pub fn schedule_params(&self, problem: &HierarchicalProblem) -> ScheduleParams {
        let s = &self.schedule;
        let step_mode = s.step_mode.unwrap_or(if self.solver.variant == Variant::SmOeg {
            StepMode::StrongMono
        } else {
            StepMode::ConstantMonotone
        });
        ScheduleParams {
            a: s.a,
            b: s.b,
            delta: s.delta,
            step_mode,
            mu: s.mu.unwrap_or_else(|| problem.data.f1.strong_mono()),
            l_f1: problem.data.f1.lipschitz(),
            l_f2: problem.data.f2.lipschitz(),
            explicit_t: s.explicit_t,
        }
    }

    /// Resolve anchors; relative file paths are taken from `base_dir`.
    pub fn anchors(&self, problem: &HierarchicalProblem, base_dir: &Path) -> Result<Option<GapAnchors>> {
        let a = &self.anchors;
        let sets = match a.mode {
            AnchorMode::None => return Ok(None),
            AnchorMode::Default => match default_anchors(problem) {
                Some(sets) => sets,
                None => return Ok(None),
            },
            AnchorMode::Explicit => {
                let load = |inline: &Option<Vec<Vec<f64>>>, file: &Option<PathBuf>, label| -> Result<AnchorSet> {
                    match (inline, file) {
                        (Some(rows), _) => Ok(AnchorSet::new(
                            rows.iter().map(|r| Vector::from_vec(r.clone())).collect(),
                            label,
                        )),
                        (None, Some(f)) => AnchorSet::load(&base_dir.join(f), label),
                        (None, None) => unreachable!("validated"),
                    }
                };
                (
                    load(&a.feasibility, &a.feasibility_file, AnchorLabel::Feasibility)?,
                    load(&a.optimality, &a.optimality_file, AnchorLabel::Optimality)?,
                )
            }
        };
        sets.0.validate(problem)?;
        sets.1.validate(problem)?;
        Ok(Some(GapAnchors {
            feasibility: sets.0.points,
            optimality: sets.1.points,
        }))
    }

    pub fn run_config(
        &self,
        problem: &HierarchicalProblem,
        base_dir: &Path,
        execution: Execution,
    ) -> Result<RunConfig> {
        let s = &self.solver;
        let mut rc = RunConfig::new(s.variant, self.schedule_params(problem), s.iterations);
        rc.start = s.start.as_ref().map(|v| Vector::from_vec(v.clone()));
        rc.log_every = s.log_every;
        rc.log_per_decade = s.log_per_decade;
        rc.stop = match (s.stop_tol_step, s.stop_tol_gap) {
            (None, None) => None,
            (step, gap) => Some(StopRule {
                tol_step: step.unwrap_or(0.0),
                tol_gap: gap.unwrap_or(f64::INFINITY),
            }),
        };
        rc.anchors = self.anchors(problem, base_dir)?;
        rc.energy_reference = if s.energy {
            EnergyReference::Solution
        } else {
            EnergyReference::None
        };
        rc.execution = execution;
        Ok(rc)
    }
}
