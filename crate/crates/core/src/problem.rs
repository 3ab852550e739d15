use std::fmt;
use std::sync::Arc;

use crate::combined::CombinedData;
use crate::error::{Error, Result};
use crate::gap::SegmentSet;
use crate::linalg::{self, Vector};

/// Closed-form description of the lower-level solution set, when known.
#[derive(Clone, Debug, PartialEq)]
pub enum LowerSet {
    Point(Vector),
    Segment(SegmentSet),
    /// The lower level is vacuous: every point is feasible.
    Whole,
}

impl LowerSet {
    pub fn project(&self, z: &Vector) -> Vector {
        match self {
            LowerSet::Point(p) => p.clone(),
            LowerSet::Segment(s) => s.project(z),
            LowerSet::Whole => z.clone(),
        }
    }

    pub fn dist(&self, z: &Vector) -> f64 {
        linalg::dist(z, &self.project(z))
    }

    /// `count` evenly spaced members (the point itself for singletons).
    pub fn samples(&self, count: usize) -> Vec<Vector> {
        match self {
            LowerSet::Point(p) => vec![p.clone()],
            LowerSet::Segment(s) => s.samples(count),
            LowerSet::Whole => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    pub solution: Option<Vector>,
    pub lower_set: Option<LowerSet>,
}

/// `(α, ρ)` weak-sharpness declaration for the lower-level solution set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakSharp {
    pub alpha: f64,
    pub rho: f64,
}

type MonitorFn = dyn Fn(&Vector, f64) -> f64 + Send + Sync;

/// Problem-specific scalar diagnostic evaluated on `(z^k, σ_k)`.
#[derive(Clone)]
pub struct Monitor {
    pub name: String,
    f: Arc<MonitorFn>,
}

impl Monitor {
    pub fn new(name: impl Into<String>, f: impl Fn(&Vector, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, z: &Vector, sigma: f64) -> f64 {
        (self.f)(z, sigma)
    }
}

impl fmt::Debug for Monitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Monitor").field("name", &self.name).finish()
    }
}

/// Find `z* ∈ S2 = zer(F2 + ∂g2)` solving the upper-level HVI with
/// `(F1, g1)` over `S2`.
#[derive(Clone, Debug)]
pub struct HierarchicalProblem {
    pub name: String,
    pub data: CombinedData,
    pub ground_truth: GroundTruth,
    pub weak_sharp: Option<WeakSharp>,
    pub monitor: Option<Monitor>,
}

impl HierarchicalProblem {
    pub fn new(name: impl Into<String>, data: CombinedData) -> Self {
        Self {
            name: name.into(),
            data,
            ground_truth: GroundTruth::default(),
            weak_sharp: None,
            monitor: None,
        }
    }

    pub fn with_solution(mut self, z: Vector) -> Result<Self> {
        linalg::ensure_dim(&z, self.dim())?;
        if !self.data.in_domain(&z) {
            return Err(Error::Domain("declared solution lies outside dom(g1) ∩ dom(g2)".into()));
        }
        self.ground_truth.solution = Some(z);
        Ok(self)
    }

    pub fn with_lower_set(mut self, set: LowerSet) -> Self {
        self.ground_truth.lower_set = Some(set);
        self
    }

    pub fn with_weak_sharp(mut self, alpha: f64, rho: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(rho >= 1.0) {
            return Err(Error::config("weak sharpness needs α > 0 and ρ ≥ 1"));
        }
        self.weak_sharp = Some(WeakSharp { alpha, rho });
        Ok(self)
    }

    pub fn with_monitor(mut self, monitor: Monitor) -> Self {
        self.monitor = Some(monitor);
        self
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn solution(&self) -> Option<&Vector> {
        self.ground_truth.solution.as_ref()
    }

    pub fn lower_set(&self) -> Option<&LowerSet> {
        self.ground_truth.lower_set.as_ref()
    }

    /// Default starting point: the origin mapped into `dom(g2)` by `prox_{g2}`
    /// with unit step.
    pub fn default_start(&self) -> Vector {
        self.data.g2.prox(1.0, &Vector::zeros(self.dim()))
    }
}
