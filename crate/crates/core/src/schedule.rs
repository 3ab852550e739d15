//! Step-size and regularization sequences.
//!
//! Two regimes are supported:
//!
//! * `ConstantMonotone`: `σ_k = a/(k+b)^δ` with a constant step
//!   `t = 1/(√8·L_1)`, `L_1 = L_F2 + σ_1·L_F1`. Since `σ_k` is
//!   nonincreasing, `8t²L_k² ≤ 1` holds for every `k`.
//! * `StrongMono`: `σ_k = 4L_F2/(μk)`, `t_k = 1/(4(L_F2 + σ_k(L_F1 + μ)))`,
//!   with averaging weights `γ_k = (k + ϰ)/ϰ`, `ϰ = 4(L_F1 + μ)/μ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    #[default]
    ConstantMonotone,
    StrongMono,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleParams {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub step_mode: StepMode,
    pub mu: f64,
    pub l_f1: f64,
    pub l_f2: f64,
    pub explicit_t: Option<f64>,
}

impl ScheduleParams {
    pub fn polynomial(a: f64, b: f64, delta: f64, l_f2: f64, l_f1: f64) -> Self {
        Self {
            a,
            b,
            delta,
            step_mode: StepMode::ConstantMonotone,
            mu: 0.0,
            l_f1,
            l_f2,
            explicit_t: None,
        }
    }

    pub fn strong(mu: f64, l_f2: f64, l_f1: f64) -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            delta: 1.0,
            step_mode: StepMode::StrongMono,
            mu,
            l_f1,
            l_f2,
            explicit_t: None,
        }
    }

    /// `δ = 1` is accepted but only carries the weaker limiting-case bounds.
    pub fn is_limiting_case(&self) -> bool {
        self.step_mode == StepMode::ConstantMonotone && self.delta == 1.0
    }
}

/// `a/(k+b)^δ`.
pub fn sigma_poly(k: usize, a: f64, b: f64, delta: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::config("iteration index k must be ≥ 1"));
    }
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::config(format!(
            "schedule needs a > 0 and b > 0 (got a = {a}, b = {b})"
        )));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::config(format!("delta must lie in (0, 1], got {delta}")));
    }
    Ok(a / (k as f64 + b).powf(delta))
}

/// `1/(√8·(L_F2 + σ_1·L_F1))`.
pub fn step_constant_monotone(l_f2: f64, l_f1: f64, sigma_1: f64) -> Result<f64> {
    let l1 = l_f2 + sigma_1 * l_f1;
    if !(l1 > 0.0) {
        return Err(Error::config(
            "combined Lipschitz constant is zero; set explicit_t to choose the step",
        ));
    }
    Ok(1.0 / (8f64.sqrt() * l1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrongStep {
    pub t: f64,
    pub sigma: f64,
    pub gamma: f64,
}

/// Step, regularization and averaging weight of the strongly monotone regime.
pub fn schedule_strong(k: usize, l_f2: f64, l_f1: f64, mu: f64) -> Result<StrongStep> {
    if !(mu > 0.0) {
        return Err(Error::config(
            "strong-monotone schedule needs μ > 0; use the constant_monotone step mode instead",
        ));
    }
    if !(l_f2 > 0.0) {
        return Err(Error::config("strong-monotone schedule needs L_F2 > 0"));
    }
    if k < 1 {
        return Err(Error::config("iteration index k must be ≥ 1"));
    }
    let kf = k as f64;
    let sigma = 4.0 * l_f2 / (mu * kf);
    let t = 1.0 / (4.0 * (l_f2 + sigma * (l_f1 + mu)));
    let kappa = 4.0 * (l_f1 + mu) / mu;
    Ok(StrongStep {
        t,
        sigma,
        gamma: (kf + kappa) / kappa,
    })
}

/// Sufficient condition `1 > δ > 1 − 1/ρ` for bounded trajectories under
/// `(α, ρ)`-weak sharpness.
pub fn check_ac_sufficient(delta: f64, rho: f64) -> bool {
    delta < 1.0 && delta > 1.0 - 1.0 / rho
}

/// Values for one iteration `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleStep {
    pub k: usize,
    pub t: f64,
    pub sigma: f64,
    /// `L_k = L_F2 + σ_k·L_F1`.
    pub lipschitz: f64,
    /// Averaging weight `γ_k`; `1` outside the strong regime.
    pub gamma: f64,
}

/// A validated schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    params: ScheduleParams,
    constant_t: f64,
}

impl Schedule {
    pub fn new(params: ScheduleParams) -> Result<Self> {
        if params.l_f1 < 0.0 || params.l_f2 < 0.0 {
            return Err(Error::config("Lipschitz constants must be nonnegative"));
        }
        let constant_t = match params.step_mode {
            StepMode::ConstantMonotone => {
                let sigma_1 = sigma_poly(1, params.a, params.b, params.delta)?;
                let l1 = params.l_f2 + sigma_1 * params.l_f1;
                match (params.explicit_t, l1 > 0.0) {
                    (Some(t), _) if !(t > 0.0) => {
                        return Err(Error::config("explicit_t must be positive"));
                    }
                    (Some(t), true) => {
                        if 8.0 * t * t * l1 * l1 > 1.0 {
                            return Err(Error::config(format!(
                                "explicit_t = {t} violates 8t²L₁² ≤ 1 (L₁ = {l1}); largest admissible step is {}",
                                1.0 / (8f64.sqrt() * l1)
                            )));
                        }
                        t
                    }
                    (Some(t), false) => t,
                    (None, _) => step_constant_monotone(params.l_f2, params.l_f1, sigma_1)?,
                }
            }
            StepMode::StrongMono => {
                schedule_strong(1, params.l_f2, params.l_f1, params.mu)?;
                0.0
            }
        };
        Ok(Self { params, constant_t })
    }

    pub fn params(&self) -> &ScheduleParams {
        &self.params
    }

    pub fn at(&self, k: usize) -> ScheduleStep {
        let p = &self.params;
        match p.step_mode {
            StepMode::ConstantMonotone => {
                let sigma = p.a / (k as f64 + p.b).powf(p.delta);
                ScheduleStep {
                    k,
                    t: self.constant_t,
                    sigma,
                    lipschitz: p.l_f2 + sigma * p.l_f1,
                    gamma: 1.0,
                }
            }
            StepMode::StrongMono => {
                let s = schedule_strong(k, p.l_f2, p.l_f1, p.mu).expect("validated in Schedule::new");
                ScheduleStep {
                    k,
                    t: s.t,
                    sigma: s.sigma,
                    lipschitz: p.l_f2 + s.sigma * p.l_f1,
                    gamma: s.gamma,
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ScheduleStep> + '_ {
        (1..).map(move |k| self.at(k))
    }
}

/// Per-run schedule bookkeeping: the current step and the running sums used
/// by the ergodic averages and rate bounds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScheduleState {
    pub current: Option<ScheduleStep>,
    /// `T_K = Σ t_i`.
    pub sum_t: f64,
    pub sum_t_sigma: f64,
    pub sum_t_sigma_gamma: f64,
    pub sum_t_sigma2_gamma: f64,
}

impl ScheduleState {
    pub fn advance(&mut self, step: ScheduleStep) {
        self.sum_t += step.t;
        self.sum_t_sigma += step.t * step.sigma;
        self.sum_t_sigma_gamma += step.t * step.sigma * step.gamma;
        self.sum_t_sigma2_gamma += step.t * step.sigma * step.sigma * step.gamma;
        self.current = Some(step);
    }
}
