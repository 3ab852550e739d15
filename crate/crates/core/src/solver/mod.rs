//! Iteration schemes on the Tikhonov-regularized pair
//! `V_k = F2 + σ_k F1`, `G_k = g2 + σ_k g1`.
//!
//! * `Oeg`: optimistic extragradient. The half step reuses the operator
//!   values cached at the previous midpoint, so each iteration evaluates F1
//!   and F2 once.
//! * `Tseng`: same half step, then a forward correction
//!   `z^{k+1} = z^{k+1/2} − t(V_k(z^{k+1/2}) − V_k(z^{k−1/2}))`. The result
//!   is not projected and may leave `dom(g)`.
//! * `SmOeg`: the `Oeg` body under the strongly monotone schedule, averaged
//!   with weights `t_k σ_k γ_k`.
//! * `Korpelevich`: classical extragradient, two evaluations per iteration.
//!
//! A [`Solver`] advances one iteration per [`Solver::step`]; [`run`] drives a
//! full budget and records a [`RunTrace`].

mod energy;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combined::OperatorPair;
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::problem::HierarchicalProblem;
use crate::schedule::{Schedule, ScheduleParams, ScheduleState, StepMode};

pub use energy::{energy_residuals, EnergyDiag};
pub use trace::{run, EnergyReference, GapAnchors, RunConfig, RunSummary, RunTrace, StopRule, TraceRecord};

use energy::EnergyTracker;

/// Iterates whose norm exceeds this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Oeg,
    Tseng,
    SmOeg,
    Korpelevich,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Oeg, Variant::Tseng, Variant::SmOeg, Variant::Korpelevich];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Oeg => "oeg",
            Variant::Tseng => "tseng",
            Variant::SmOeg => "sm_oeg",
            Variant::Korpelevich => "korpelevich",
        }
    }

    /// Fresh evaluations of each operator per iteration.
    pub fn evals_per_iteration(self) -> u64 {
        match self {
            Variant::Korpelevich => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| {
            Error::config(format!(
                "unknown variant '{s}' (expected oeg, tseng, sm_oeg or korpelevich)"
            ))
        })
    }
}

/// Operator evaluation counts. The single evaluation at `z^{1/2} = z¹`
/// made during initialization is kept apart from per-iteration work.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub f1: u64,
    pub f2: u64,
    pub init_f1: u64,
    pub init_f2: u64,
}

impl EvalCounts {
    pub fn total_f1(&self) -> u64 {
        self.f1 + self.init_f1
    }

    pub fn total_f2(&self) -> u64 {
        self.f2 + self.init_f2
    }
}

/// What one call to [`Solver::step`] did.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub k: usize,
    pub t: f64,
    pub sigma: f64,
    pub gamma: f64,
    /// `‖z^{k+1/2} − z^k‖`.
    pub step_norm: f64,
    pub energy: Option<EnergyDiag>,
}

pub struct Solver<'a> {
    problem: &'a HierarchicalProblem,
    variant: Variant,
    schedule: Schedule,
    sched: ScheduleState,
    mu: f64,
    z: Vector,
    z_half: Vector,
    /// `(F2, F1)` at the last midpoint; unused by Korpelevich.
    cache: Option<OperatorPair>,
    erg_num: Vector,
    erg_den: f64,
    k: usize,
    evals: EvalCounts,
    energy: Option<EnergyTracker>,
}

impl<'a> Solver<'a> {
    /// Initializes `z¹ = z^{1/2} = start` (default: [`HierarchicalProblem::default_start`]).
    pub fn new(
        problem: &'a HierarchicalProblem,
        variant: Variant,
        params: ScheduleParams,
        start: Option<Vector>,
    ) -> Result<Self> {
        let strong = params.step_mode == StepMode::StrongMono;
        match (variant, strong) {
            (Variant::SmOeg, false) => {
                return Err(Error::config("variant sm_oeg needs step_mode = \"strong_mono\""));
            }
            (v, true) if v != Variant::SmOeg => {
                return Err(Error::config(format!(
                    "variant {v} needs step_mode = \"constant_monotone\"; the strong schedule belongs to sm_oeg"
                )));
            }
            _ => {}
        }
        if variant == Variant::SmOeg && !(problem.data.f1.strong_mono() > 0.0) {
            return Err(Error::config(
                "sm_oeg needs a strongly monotone F1 (declared μ = 0); use the oeg variant instead",
            ));
        }
        let schedule = Schedule::new(params)?;
        let z = match start {
            Some(z) => {
                linalg::ensure_dim(&z, problem.dim())?;
                if !linalg::is_finite(&z) {
                    return Err(Error::config("start point has non-finite entries"));
                }
                z
            }
            None => problem.default_start(),
        };
        let mut evals = EvalCounts::default();
        let cache = if variant == Variant::Korpelevich {
            None
        } else {
            let pair = problem.data.eval_pair(&z)?;
            evals.init_f1 = 1;
            evals.init_f2 = 1;
            Some(pair)
        };
        Ok(Self {
            problem,
            variant,
            schedule,
            sched: ScheduleState::default(),
            mu: params.mu,
            erg_num: Vector::zeros(z.len()),
            z_half: z.clone(),
            z,
            cache,
            erg_den: 0.0,
            k: 0,
            evals,
            energy: None,
        })
    }

    /// Track energy diagnostics against `z_ref`, which must lie in
    /// `dom(g1) ∩ dom(g2)`.
    pub fn with_energy_reference(mut self, z_ref: Vector) -> Result<Self> {
        linalg::ensure_dim(&z_ref, self.problem.dim())?;
        if self.k > 0 {
            return Err(Error::config("energy reference must be set before the first step"));
        }
        self.energy = Some(EnergyTracker::new(&self.problem.data, z_ref, &self.z)?);
        Ok(self)
    }

    pub fn problem(&self) -> &HierarchicalProblem {
        self.problem
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Completed iterations.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Current iterate `z^{k+1}` (`z¹` before the first step).
    pub fn z(&self) -> &Vector {
        &self.z
    }

    /// Latest midpoint `z^{k+1/2}`.
    pub fn z_half(&self) -> &Vector {
        &self.z_half
    }

    /// Ergodic average; `z¹` before the first step.
    pub fn average(&self) -> Vector {
        if self.erg_den > 0.0 {
            &self.erg_num / self.erg_den
        } else {
            self.z.clone()
        }
    }

    pub fn evals(&self) -> EvalCounts {
        self.evals
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn schedule_state(&self) -> &ScheduleState {
        &self.sched
    }

    /// σ of the last completed iteration.
    pub fn sigma(&self) -> Option<f64> {
        self.sched.current.map(|s| s.sigma)
    }

    /// `E_k` and `D_k` at the current iterate, if tracking energy.
    pub fn energy_state(&self) -> Option<(f64, f64)> {
        self.energy.as_ref().map(|e| (e.e, e.d))
    }

    fn eval(&mut self, z: &Vector) -> OperatorPair {
        self.evals.f1 += 1;
        self.evals.f2 += 1;
        self.problem.data.apply_pair(z)
    }

    pub fn step(&mut self) -> Result<StepInfo> {
        let k = self.k + 1;
        let s = self.schedule.at(k);
        let (t, sigma) = (s.t, s.sigma);
        let data = &self.problem.data;

        let (z_half, z_next, v_old, pair) = match self.variant {
            Variant::Oeg | Variant::SmOeg | Variant::Tseng => {
                let v_old = self.cache.as_ref().expect("cache initialized").weighted(sigma);
                let z_half = data.prox(t, sigma, &(&self.z - t * &v_old))?;
                let pair = self.eval(&z_half);
                let v_new = pair.weighted(sigma);
                let z_next = if self.variant == Variant::Tseng {
                    &z_half - t * (&v_new - &v_old)
                } else {
                    self.problem.data.prox(t, sigma, &(&self.z - t * &v_new))?
                };
                (z_half, z_next, Some(v_old), pair)
            }
            Variant::Korpelevich => {
                let v0 = self.eval(&self.z.clone()).weighted(sigma);
                let z_half = data.prox(t, sigma, &(&self.z - t * &v0))?;
                let pair = self.eval(&z_half);
                let z_next = self
                    .problem
                    .data
                    .prox(t, sigma, &(&self.z - t * pair.weighted(sigma)))?;
                (z_half, z_next, None, pair)
            }
        };

        for (what, v) in [("midpoint", &z_half), ("iterate", &z_next)] {
            let reason = if !linalg::is_finite(v) {
                Some(format!("non-finite {what}"))
            } else if v.norm() > DIVERGENCE_NORM {
                Some(format!("{what} norm exceeded {DIVERGENCE_NORM:e}"))
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(Error::Divergence {
                    k,
                    reason,
                    last_finite: Box::new(self.z.clone()),
                });
            }
        }

        let step_norm = linalg::dist(&z_half, &self.z);
        let energy = match self.energy.as_mut() {
            Some(tracker) => Some(tracker.update(
                &self.problem.data,
                self.variant,
                &s,
                self.mu,
                &self.z,
                &z_half,
                &z_next,
                v_old.as_ref(),
                &pair,
            )),
            None => None,
        };

        self.sched.advance(s);
        let weight = match self.variant {
            Variant::SmOeg => t * sigma * s.gamma,
            _ => t,
        };
        self.erg_num.axpy(weight, &z_half, 1.0);
        self.erg_den += weight;
        if self.variant != Variant::Korpelevich {
            self.cache = Some(pair);
        }
        self.z_half = z_half;
        self.z = z_next;
        self.k = k;
        Ok(StepInfo {
            k,
            t,
            sigma,
            gamma: s.gamma,
            step_norm,
            energy,
        })
    }
}
