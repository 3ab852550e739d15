use crate::combined::{CombinedData, OperatorPair};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::problem::HierarchicalProblem;
use crate::schedule::{ScheduleParams, ScheduleStep};

use super::{Solver, Variant};

/// Energy quantities after one iteration, measured against a reference
/// point `z_ref`.
///
/// `e`, `d` and `w` refer to the new iterate (`E_{k+1}`, `D_{k+1}`,
/// `W_{k+1} = E_{k+1} + D_{k+1}`). `resid` is the defect of the one-step
/// recursion, which should be `≤ 0`:
///
/// * monotone variants: `E_{k+1} + D_{k+1} − (E_k + D_k − t_kΨ_k − ¼‖z^{k+1/2} − z^k‖²)`;
/// * `sm_oeg`: `W_{k+1} − ((1 − t_kσ_kμ)W_k − t_kΦ2 − t_kσ_kΦ1)`, with
///   `Φi = ⟨Fi(z_ref), z^{k+1/2} − z_ref⟩ + gi(z^{k+1/2}) − gi(z_ref)`.
///
/// Korpelevich has no `D` term, so only `e` and `psi` are set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyDiag {
    pub e: f64,
    pub d: Option<f64>,
    pub w: Option<f64>,
    pub psi: f64,
    pub resid: Option<f64>,
    pub phi1: Option<f64>,
}

#[derive(Clone, Debug)]
pub(super) struct EnergyTracker {
    z_ref: Vector,
    f_ref: OperatorPair,
    g2_ref: f64,
    g1_ref: f64,
    pub(super) e: f64,
    pub(super) d: f64,
}

fn half_sq(v: &Vector) -> f64 {
    0.5 * v.norm_squared()
}

impl EnergyTracker {
    pub(super) fn new(data: &CombinedData, z_ref: Vector, z1: &Vector) -> Result<Self> {
        let g2_ref = data.g2.value(&z_ref);
        let g1_ref = data.g1.value(&z_ref);
        if !g2_ref.is_finite() || !g1_ref.is_finite() {
            return Err(Error::Domain(
                "energy reference must lie in dom(g1) ∩ dom(g2) (G_k(z_ref) = +∞)".into(),
            ));
        }
        Ok(Self {
            f_ref: data.eval_pair(&z_ref)?,
            e: half_sq(&(z1 - &z_ref)),
            d: 0.0,
            z_ref,
            g2_ref,
            g1_ref,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub(super) fn update(
        &mut self,
        data: &CombinedData,
        variant: Variant,
        s: &ScheduleStep,
        mu: f64,
        z: &Vector,
        z_half: &Vector,
        z_next: &Vector,
        v_old: Option<&Vector>,
        pair: &OperatorPair,
    ) -> EnergyDiag {
        let (t, sigma) = (s.t, s.sigma);
        let dz = z_half - &self.z_ref;
        let v_new = pair.weighted(sigma);
        let g_ref = if sigma == 0.0 {
            self.g2_ref
        } else {
            self.g2_ref + sigma * self.g1_ref
        };
        let psi = v_new.dot(&dz) + data.value(sigma, z_half) - g_ref;
        let e_next = half_sq(&(z_next - &self.z_ref));
        let w_prev = self.e + self.d;

        let Some(v_old) = v_old else {
            self.e = e_next;
            return EnergyDiag {
                e: e_next,
                d: None,
                w: None,
                psi,
                resid: None,
                phi1: None,
            };
        };
        let d_next = 0.5 * t * t * (v_old - &v_new).norm_squared();
        let w_next = e_next + d_next;
        let (resid, phi1) = if variant == Variant::SmOeg {
            let phi2 = self.f_ref.f2.dot(&dz) + data.g2.value(z_half) - self.g2_ref;
            let phi1 = self.f_ref.f1.dot(&dz) + data.g1.value(z_half) - self.g1_ref;
            let bound = (1.0 - t * sigma * mu) * w_prev - t * phi2 - t * sigma * phi1;
            (w_next - bound, Some(phi1))
        } else {
            let step_sq = (z_half - z).norm_squared();
            (w_next - (w_prev - t * psi - 0.25 * step_sq), None)
        };
        self.e = e_next;
        self.d = d_next;
        EnergyDiag {
            e: e_next,
            d: Some(d_next),
            w: Some(w_next),
            psi,
            resid: Some(resid),
            phi1,
        }
    }
}

/// Run `iterations` steps and return the recursion residual of each.
pub fn energy_residuals(
    problem: &HierarchicalProblem,
    variant: Variant,
    params: ScheduleParams,
    start: Option<Vector>,
    z_ref: Vector,
    iterations: usize,
) -> Result<Vec<f64>> {
    if variant == Variant::Korpelevich {
        return Err(Error::config("energy recursion is not defined for korpelevich"));
    }
    let mut solver = Solver::new(problem, variant, params, start)?.with_energy_reference(z_ref)?;
    (0..iterations)
        .map(|_| {
            let info = solver.step()?;
            Ok(info.energy.and_then(|e| e.resid).expect("energy tracked"))
        })
        .collect()
}
