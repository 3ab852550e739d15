//! Gap functions over finite anchor sets, distances to segment-shaped
//! solution sets, a weak-sharpness probe and log-log rate fitting.
//!
//! Every gap here is a maximum over finitely many anchors and therefore a
//! lower bound on the supremum over any continuous set containing them.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::operator::OperatorSpec;
use crate::par::{self, Execution};
use crate::problem::{HierarchicalProblem, LowerSet};
use crate::prox::ProxTerm;

/// Anchors used for optimality gaps must lie this close to the lower set.
pub const S2_MEMBERSHIP_TOL: f64 = 1e-8;

/// `{base + s·direction : lo ≤ s ≤ hi}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentSet {
    base: Vector,
    direction: Vector,
    lo: f64,
    hi: f64,
}

impl SegmentSet {
    pub fn new(base: Vector, direction: Vector, lo: f64, hi: f64) -> Result<Self> {
        linalg::ensure_dim(&direction, base.len())?;
        if direction.norm_squared() == 0.0 {
            return Err(Error::config("segment direction must be nonzero"));
        }
        if !(lo <= hi) {
            return Err(Error::config(format!("segment parameter range [{lo}, {hi}] is empty")));
        }
        Ok(Self {
            base,
            direction,
            lo,
            hi,
        })
    }

    pub fn base(&self) -> &Vector {
        &self.base
    }

    pub fn direction(&self) -> &Vector {
        &self.direction
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn point(&self, s: f64) -> Vector {
        &self.base + s * &self.direction
    }

    /// Parameter of the nearest point, clamped to the range.
    pub fn project_param(&self, z: &Vector) -> f64 {
        let s = self.direction.dot(&(z - &self.base)) / self.direction.norm_squared();
        s.clamp(self.lo, self.hi)
    }

    pub fn project(&self, z: &Vector) -> Vector {
        self.point(self.project_param(z))
    }

    pub fn dist(&self, z: &Vector) -> f64 {
        linalg::dist(z, &self.project(z))
    }

    /// `count` evenly spaced points, endpoints included.
    pub fn samples(&self, count: usize) -> Vec<Vector> {
        match count {
            0 => Vec::new(),
            1 => vec![self.point(0.5 * (self.lo + self.hi))],
            _ => (0..count)
                .map(|i| self.point(self.lo + (self.hi - self.lo) * i as f64 / (count - 1) as f64))
                .collect(),
        }
    }
}

pub fn dist_to_segment(seg: &SegmentSet, z: &Vector) -> f64 {
    seg.dist(z)
}

/// `H(z, y) = ⟨F(y), z − y⟩ + g(z) − g(y)`; `+∞` when `z ∉ dom(g)`.
pub fn h_bifunction(f: &OperatorSpec, g: &ProxTerm, z: &Vector, y: &Vector) -> Result<f64> {
    linalg::ensure_dim(z, f.dim())?;
    let gy = g.value(y);
    if !gy.is_finite() {
        return Err(Error::Domain("anchor y lies outside dom(g)".into()));
    }
    let fy = f.eval(y)?;
    let gz = g.value(z);
    if gz == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(fy.dot(&(z - y)) + gz - gy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnchorLabel {
    Feasibility,
    Optimality,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnchorSet {
    pub points: Vec<Vector>,
    pub label: AnchorLabel,
}

impl AnchorSet {
    pub fn new(points: Vec<Vector>, label: AnchorLabel) -> Self {
        Self { points, label }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// One point per nonblank line, whitespace-separated decimals. Lines
    /// starting with `#` are ignored.
    pub fn parse_matrix(text: &str, label: AnchorLabel) -> Result<Self> {
        let mut points = Vec::new();
        let mut width = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row =
                line.split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                            Error::config(format!("anchor file line {}: bad number '{tok}'", lineno + 1))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::config(format!(
                        "anchor file line {}: expected {w} entries, found {}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            points.push(Vector::from_vec(row));
        }
        Ok(Self { points, label })
    }

    pub fn load(path: &Path, label: AnchorLabel) -> Result<Self> {
        Self::parse_matrix(&std::fs::read_to_string(path)?, label)
    }

    /// Check dimensions and domains against a problem. Optimality anchors must
    /// also lie in the lower set when a descriptor exists.
    pub fn validate(&self, problem: &HierarchicalProblem) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::config("anchor set is empty"));
        }
        let g = match self.label {
            AnchorLabel::Feasibility => &problem.data.g2,
            AnchorLabel::Optimality => &problem.data.g1,
        };
        for (i, p) in self.points.iter().enumerate() {
            linalg::ensure_dim(p, problem.dim())?;
            if !g.in_domain(p) {
                return Err(Error::config(format!(
                    "anchor {i} lies outside the domain of its g-term"
                )));
            }
        }
        if self.label == AnchorLabel::Optimality {
            check_lower_membership(problem, &self.points)?;
        }
        Ok(())
    }
}

fn check_lower_membership(problem: &HierarchicalProblem, points: &[Vector]) -> Result<()> {
    if let Some(set) = problem.lower_set() {
        for (i, p) in points.iter().enumerate() {
            let d = set.dist(p);
            if d > S2_MEMBERSHIP_TOL {
                return Err(Error::config(format!(
                    "optimality anchor {i} is {d:.3e} away from the lower-level solution set"
                )));
            }
        }
    }
    Ok(())
}

/// `max_{y ∈ anchors} H(z, y)`.
pub fn gap_over_anchors(f: &OperatorSpec, g: &ProxTerm, anchors: &[Vector], z: &Vector) -> Result<f64> {
    gap_over_anchors_with(Execution::Sequential, f, g, anchors, z)
}

pub fn gap_over_anchors_with(
    exec: Execution,
    f: &OperatorSpec,
    g: &ProxTerm,
    anchors: &[Vector],
    z: &Vector,
) -> Result<f64> {
    if anchors.is_empty() {
        return Err(Error::config("gap needs at least one anchor"));
    }
    par::map(exec, anchors, |y| h_bifunction(f, g, z, y))
        .into_iter()
        .try_fold(f64::NEG_INFINITY, |acc, h| Ok(acc.max(h?)))
}

/// Feasibility gap: anchors against `(F2, g2)`.
pub fn feas_gap(problem: &HierarchicalProblem, anchors: &[Vector], z: &Vector) -> Result<f64> {
    gap_over_anchors(&problem.data.f2, &problem.data.g2, anchors, z)
}

/// Optimality gap: anchors in the lower set against `(F1, g1)`. May be
/// negative at infeasible points.
pub fn opt_gap(problem: &HierarchicalProblem, anchors: &[Vector], z: &Vector) -> Result<f64> {
    check_lower_membership(problem, anchors)?;
    gap_over_anchors(&problem.data.f1, &problem.data.g1, anchors, z)
}

/// Anchor set with `F(y)` and `g(y)` evaluated once, for repeated gap
/// evaluation along a trajectory.
#[derive(Clone, Debug)]
pub struct PreparedGap {
    anchors: Vec<Vector>,
    fy: Vec<Vector>,
    gy: Vec<f64>,
    g: ProxTerm,
}

impl PreparedGap {
    pub fn new(exec: Execution, f: &OperatorSpec, g: &ProxTerm, anchors: &[Vector]) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::config("gap needs at least one anchor"));
        }
        let evals = par::map(exec, anchors, |y| -> Result<(Vector, f64)> {
            let gy = g.value(y);
            if !gy.is_finite() {
                return Err(Error::Domain("anchor y lies outside dom(g)".into()));
            }
            Ok((f.eval(y)?, gy))
        });
        let mut fy = Vec::with_capacity(anchors.len());
        let mut gy = Vec::with_capacity(anchors.len());
        for e in evals {
            let (a, b) = e?;
            fy.push(a);
            gy.push(b);
        }
        Ok(Self {
            anchors: anchors.to_vec(),
            fy,
            gy,
            g: g.clone(),
        })
    }

    pub fn feasibility(exec: Execution, problem: &HierarchicalProblem, anchors: &[Vector]) -> Result<Self> {
        Self::new(exec, &problem.data.f2, &problem.data.g2, anchors)
    }

    pub fn optimality(exec: Execution, problem: &HierarchicalProblem, anchors: &[Vector]) -> Result<Self> {
        check_lower_membership(problem, anchors)?;
        Self::new(exec, &problem.data.f1, &problem.data.g1, anchors)
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn eval(&self, z: &Vector) -> f64 {
        let gz = self.g.value(z);
        if gz == f64::INFINITY {
            return f64::INFINITY;
        }
        self.anchors
            .iter()
            .zip(&self.fy)
            .zip(&self.gy)
            .map(|((y, fy), gy)| fy.dot(&(z - y)) + gz - gy)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Default anchor sets for problems with a lower-set descriptor:
/// 64 samples of the set plus the known solution for optimality, and the
/// same points plus a shell of perturbations (radii 1 and 5 along unit
/// coordinate and pairwise-difference directions around four of the
/// samples, kept when inside `dom(g2)`) for feasibility. Without the shell a
/// feasibility gap over lower-set points only sees `g2`, which is often flat
/// there.
pub fn default_anchors(problem: &HierarchicalProblem) -> Option<(AnchorSet, AnchorSet)> {
    let set = problem.lower_set()?;
    let mut core = set.samples(64);
    if core.is_empty() {
        return None;
    }
    if let Some(z) = problem.solution() {
        core.push(z.clone());
    }
    core.retain(|p| problem.data.g1.in_domain(p) && problem.data.g2.in_domain(p));
    let opt = AnchorSet::new(core.clone(), AnchorLabel::Optimality);

    let n = problem.dim();
    let mut dirs = Vec::new();
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        dirs.push(e);
        for j in i + 1..n {
            let mut e = Vector::zeros(n);
            e[i] = std::f64::consts::FRAC_1_SQRT_2;
            e[j] = -std::f64::consts::FRAC_1_SQRT_2;
            dirs.push(e);
        }
    }
    let samples = set.samples(64);
    let centres: Vec<&Vector> = match set {
        LowerSet::Segment(_) => [0usize, 21, 42, 63].iter().map(|&i| &samples[i]).collect(),
        _ => samples.iter().collect(),
    };
    let mut feas = core;
    for c in centres {
        for r in [1.0, 5.0] {
            for e in &dirs {
                for sign in [1.0, -1.0] {
                    let p = c + (sign * r) * e;
                    if problem.data.g2.in_domain(&p) {
                        feas.push(p);
                    }
                }
            }
        }
    }
    Some((AnchorSet::new(feas, AnchorLabel::Feasibility), opt))
}

/// Axis-aligned sampling box for the weak-sharpness probe.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBox {
    pub lower: Vector,
    pub upper: Vector,
}

impl SampleBox {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        linalg::ensure_dim(&upper, lower.len())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::config("sampling box has lower > upper"));
        }
        Ok(Self { lower, upper })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        Vector::from_fn(self.lower.len(), |i, _| {
            let (l, u) = (self.lower[i], self.upper[i]);
            if l == u {
                l
            } else {
                rng.gen_range(l..=u)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakSharpReport {
    pub alpha: f64,
    pub rho: f64,
    pub samples: usize,
    pub violations: usize,
    /// Largest α consistent with every sample at this ρ.
    pub max_alpha: f64,
    /// Draws rejected because they fell outside `dom(g2)`.
    pub rejected: usize,
}

impl WeakSharpReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Tests `H^{(F2,g2)}(z, Π(z)) ≥ (α/ρ)·dist(z, S2)^ρ − 1e−9` on random
/// `z ∈ dom(g2)` drawn from `bounds`.
pub fn weak_sharpness_probe<R: Rng + ?Sized>(
    problem: &HierarchicalProblem,
    samples: usize,
    alpha: f64,
    rho: f64,
    bounds: &SampleBox,
    rng: &mut R,
) -> Result<WeakSharpReport> {
    let set = problem
        .lower_set()
        .ok_or_else(|| Error::config("weak-sharpness probe needs a lower-set descriptor"))?;
    if !(alpha > 0.0) || !(rho >= 1.0) {
        return Err(Error::config("weak-sharpness probe needs α > 0 and ρ ≥ 1"));
    }
    linalg::ensure_dim(&bounds.lower, problem.dim())?;
    let (f, g) = (&problem.data.f2, &problem.data.g2);
    let mut report = WeakSharpReport {
        alpha,
        rho,
        samples: 0,
        violations: 0,
        max_alpha: f64::INFINITY,
        rejected: 0,
    };
    let max_draws = samples.saturating_mul(100).max(100);
    let mut draws = 0;
    while report.samples < samples {
        if draws == max_draws {
            return Err(Error::config("sampling box barely intersects dom(g2)"));
        }
        draws += 1;
        let z = bounds.sample(rng);
        if !g.in_domain(&z) {
            report.rejected += 1;
            continue;
        }
        report.samples += 1;
        let p = set.project(&z);
        let d = linalg::dist(&z, &p);
        let h = h_bifunction(f, g, &z, &p)?;
        if h < alpha / rho * d.powf(rho) - 1e-9 {
            report.violations += 1;
        }
        if d > 1e-12 {
            report.max_alpha = report.max_alpha.min(rho * h / d.powf(rho));
        }
    }
    Ok(report)
}

/// Least-squares slope of `log(value)` against `log(k)` over
/// `k ∈ [lo, hi]`. Nonpositive and non-finite values are skipped.
pub fn rate_slope(ks: &[f64], values: &[f64], (lo, hi): (f64, f64)) -> Result<f64> {
    if ks.len() != values.len() {
        return Err(Error::Dimension {
            expected: ks.len(),
            got: values.len(),
        });
    }
    let mut skipped = 0;
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(values)
        .filter(|(&k, _)| k >= lo && k <= hi && k > 0.0)
        .filter_map(|(&k, &v)| {
            if v > 0.0 && v.is_finite() {
                Some((k.ln(), v.ln()))
            } else {
                skipped += 1;
                None
            }
        })
        .collect();
    if skipped > 0 {
        log::warn!("rate_slope: excluded {skipped} nonpositive values");
    }
    if pts.len() < 2 {
        return Err(Error::config(format!(
            "rate_slope needs at least two positive values in [{lo}, {hi}], found {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::config("rate_slope needs at least two distinct k"));
    }
    Ok(sxy / sxx)
}
