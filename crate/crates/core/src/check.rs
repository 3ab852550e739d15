//! Randomized invariant checks over the problem zoo.
//!
//! Each check draws from its own ChaCha stream derived from the seed and
//! the check's position in the job list, so the outcome does not depend on
//! the execution mode.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CheckSection, Fault};
use crate::gap::{default_anchors, weak_sharpness_probe, PreparedGap, SampleBox};
use crate::linalg::Vector;
use crate::par::{self, Execution};
use crate::problem::HierarchicalProblem;
use crate::prox::{ProxOracle, ProxTerm, ScalarTerm};
use crate::report::CheckOutcome;
use crate::schedule::{Schedule, ScheduleParams};
use crate::solver::{energy_residuals, Variant};

const SAMPLE_RADIUS: f64 = 10.0;

/// Clamp to `[lo, hi]` that sends everything above `hi` to `hi + 1`.
#[derive(Debug)]
pub struct OffByOneClamp {
    pub lo: f64,
    pub hi: f64,
}

impl ProxOracle for OffByOneClamp {
    fn prox(&self, _step: f64, u: &Vector) -> Vector {
        u.map(|x| if x > self.hi { self.hi + 1.0 } else { x.max(self.lo) })
    }
    fn value(&self, z: &Vector) -> f64 {
        if z.iter().all(|&x| x >= self.lo && x <= self.hi + 1.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

type ProxFn = dyn Fn(f64, &Vector) -> Vector + Send + Sync;
type ValueFn = dyn Fn(&Vector) -> f64 + Send + Sync;

/// A prox map under test with its function value.
#[derive(Clone)]
struct ProxCase {
    target: String,
    dim: usize,
    radius: f64,
    prox: Arc<ProxFn>,
    value: Arc<ValueFn>,
}

impl ProxCase {
    fn term(target: String, dim: usize, g: ProxTerm) -> Self {
        let h = g.clone();
        Self {
            target,
            dim,
            radius: SAMPLE_RADIUS,
            prox: Arc::new(move |t, u| g.prox(t, u)),
            value: Arc::new(move |z| h.value(z)),
        }
    }

    fn combined(problem: &HierarchicalProblem, sigma: f64) -> Self {
        let (a, b) = (problem.data.clone(), problem.data.clone());
        Self {
            target: format!("{}.g2+{sigma}g1", problem.name),
            dim: problem.dim(),
            radius: SAMPLE_RADIUS,
            prox: Arc::new(move |t, u| a.prox(t, sigma, u).unwrap_or_else(|_| u.map(|_| f64::NAN))),
            value: Arc::new(move |z| b.value(sigma, z)),
        }
    }
}

#[derive(Clone)]
enum Job {
    ProxNonexpansive(ProxCase),
    ProxVariational(ProxCase),
    Operator(Arc<HierarchicalProblem>, bool),
    Energy(Arc<HierarchicalProblem>, Variant),
    WeakSharp(Arc<HierarchicalProblem>),
    GapSigns(Arc<HierarchicalProblem>),
    GapConvexity(Arc<HierarchicalProblem>),
    ScheduleRule(Arc<HierarchicalProblem>),
}

fn uniform(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Vector {
    Vector::from_fn(dim, |_, _| rng.gen_range(-r..r))
}

struct Tally {
    checked: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            checked: 0,
            violations: 0,
            worst: 0.0,
        }
    }

    /// Record one comparison; `excess > 0` (or NaN) is a violation.
    fn add(&mut self, excess: f64) {
        self.checked += 1;
        if !(excess <= 0.0) {
            self.violations += 1;
            self.worst = self.worst.max(if excess.is_nan() { f64::INFINITY } else { excess });
        }
    }

    fn outcome(self, name: &str, target: &str, detail: String) -> CheckOutcome {
        CheckOutcome {
            name: name.to_string(),
            target: target.to_string(),
            passed: self.violations == 0,
            checked: self.checked,
            violations: self.violations,
            worst: self.worst,
            detail,
        }
    }
}

fn catalog() -> Vec<ProxCase> {
    let terms = [
        (
            "box",
            ProxTerm::box_indicator(&[-1.0, 0.0, 2.0], &[1.0, 5.0, 2.5]).unwrap(),
        ),
        ("abs", ProxTerm::separable(vec![ScalarTerm::abs(0.7); 3])),
        ("quadratic", ProxTerm::separable(vec![ScalarTerm::quadratic(3.0); 3])),
        (
            "hinge_box",
            ProxTerm::separable(vec![ScalarTerm::hinge_box(2.0, 1.5, 0.5, -1.0, 4.0).unwrap(); 3]),
        ),
        ("nonneg_orthant", ProxTerm::nonneg_orthant(3)),
    ];
    terms
        .into_iter()
        .map(|(name, g)| ProxCase::term(format!("catalog.{name}"), 3, g))
        .collect()
}

fn jobs(problems: &[Arc<HierarchicalProblem>], fault: Option<Fault>) -> Vec<Job> {
    let mut cases = catalog();
    for p in problems {
        let n = p.dim();
        cases.push(ProxCase::term(format!("{}.g1", p.name), n, p.data.g1.clone()));
        cases.push(ProxCase::term(format!("{}.g2", p.name), n, p.data.g2.clone()));
        cases.push(ProxCase::combined(p, 0.5));
    }
    if fault == Some(Fault::ProxOffByOne) {
        let g = ProxTerm::custom(OffByOneClamp { lo: 0.0, hi: 1.0 });
        let mut case = ProxCase::term("injected.off_by_one_clamp".into(), 1, g);
        case.radius = 2.0;
        cases.push(case);
    }
    let mut jobs: Vec<Job> = cases.iter().cloned().map(Job::ProxNonexpansive).collect();
    jobs.extend(cases.into_iter().map(Job::ProxVariational));
    for p in problems {
        jobs.push(Job::Operator(p.clone(), false));
        jobs.push(Job::Operator(p.clone(), true));
        jobs.push(Job::ScheduleRule(p.clone()));
        if p.solution().is_some_and(|s| p.data.in_domain(s)) {
            jobs.push(Job::Energy(p.clone(), Variant::Oeg));
            jobs.push(Job::Energy(p.clone(), Variant::Tseng));
            if p.data.f1.strong_mono() > 0.0 && p.data.f2.lipschitz() > 0.0 {
                jobs.push(Job::Energy(p.clone(), Variant::SmOeg));
            }
        }
        if p.weak_sharp.is_some() && p.lower_set().is_some() {
            jobs.push(Job::WeakSharp(p.clone()));
        }
        if default_anchors(p).is_some() {
            jobs.push(Job::GapSigns(p.clone()));
            jobs.push(Job::GapConvexity(p.clone()));
        }
    }
    jobs
}

fn prox_nonexpansive(c: &ProxCase, pairs: usize, rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut tally = Tally::new();
    for _ in 0..pairs {
        let t = rng.gen_range(0.01..2.0);
        let (u, v) = (uniform(rng, c.dim, c.radius), uniform(rng, c.dim, c.radius));
        let d = (&u - &v).norm();
        let dp = ((c.prox)(t, &u) - (c.prox)(t, &v)).norm();
        tally.add(dp - d - 1e-10);
    }
    tally.outcome("prox_nonexpansive", &c.target, String::new())
}

/// `⟨u − x, z − x⟩ ≤ t(g(z) − g(x))` for `x = prox_{tg}(u)` and
/// `z ∈ dom g`.
fn prox_variational(c: &ProxCase, pairs: usize, rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut tally = Tally::new();
    for _ in 0..pairs {
        let t = rng.gen_range(0.01..2.0);
        let u = uniform(rng, c.dim, c.radius);
        let x = (c.prox)(t, &u);
        let z = (c.prox)(1.0, &uniform(rng, c.dim, c.radius));
        let (gx, gz) = ((c.value)(&x), (c.value)(&z));
        let lhs = (&u - &x).dot(&(&z - &x));
        let rhs = t * (gz - gx);
        tally.add(lhs - rhs - 1e-8);
    }
    tally.outcome("prox_variational", &c.target, String::new())
}

fn operator_margins(p: &HierarchicalProblem, upper: bool, pairs: usize, rng: &mut ChaCha8Rng) -> Vec<CheckOutcome> {
    let (f, which) = if upper { (&p.data.f1, "F1") } else { (&p.data.f2, "F2") };
    let target = format!("{}.{which}", p.name);
    let (mut mono, mut lip) = (Tally::new(), Tally::new());
    let r = 5.0;
    for _ in 0..pairs {
        let (z1, z2) = (uniform(rng, p.dim(), r), uniform(rng, p.dim(), r));
        let nz = (&z1 - &z2).norm();
        let nf = (f.apply(&z1) - f.apply(&z2)).norm();
        let (m, l) = f.pair_margins(&z1, &z2);
        let scale = 1.0 + nf * nz + f.strong_mono() * nz * nz;
        mono.add(-m - 1e-9 * scale);
        lip.add(l - 1e-8 * (1.0 + f.lipschitz() * nz));
    }
    vec![
        mono.outcome("monotonicity", &target, format!("declared mu = {}", f.strong_mono())),
        lip.outcome("lipschitz", &target, format!("declared L = {}", f.lipschitz())),
    ]
}

fn zoo_schedule(p: &HierarchicalProblem, variant: Variant) -> ScheduleParams {
    let (l2, l1) = (p.data.f2.lipschitz(), p.data.f1.lipschitz());
    if variant == Variant::SmOeg {
        ScheduleParams::strong(p.data.f1.strong_mono(), l2, l1)
    } else {
        ScheduleParams::polynomial(1.0, 3.0, 0.5, l2, l1)
    }
}

fn energy(p: &HierarchicalProblem, variant: Variant, iterations: usize) -> CheckOutcome {
    let name = match variant {
        Variant::SmOeg => "strong_recursion",
        _ => "energy_recursion",
    };
    let target = format!("{}.{}", p.name, variant.as_str());
    let z_ref = p.solution().expect("filtered").clone();
    let scale = 1.0 + (p.default_start() - &z_ref).norm_squared();
    let mut tally = Tally::new();
    match energy_residuals(p, variant, zoo_schedule(p, variant), None, z_ref, iterations) {
        Ok(res) => {
            let max = res.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for r in res {
                tally.add(r - 1e-9 * scale);
            }
            tally.outcome(name, &target, format!("max residual {max:e}"))
        }
        Err(e) => {
            tally.add(f64::NAN);
            tally.outcome(name, &target, e.to_string())
        }
    }
}

fn weak_sharp(p: &HierarchicalProblem, samples: usize, rng: &mut ChaCha8Rng) -> CheckOutcome {
    let ws = p.weak_sharp.expect("filtered");
    let n = p.dim();
    let bounds = SampleBox::new(Vector::from_element(n, -5.0), Vector::from_element(n, 5.0)).expect("valid box");
    let mut tally = Tally::new();
    match weak_sharpness_probe(p, samples, ws.alpha, ws.rho, &bounds, rng) {
        Ok(r) => {
            tally.checked = r.samples;
            tally.violations = r.violations;
            tally.worst = if r.passed() { 0.0 } else { ws.alpha - r.max_alpha };
            tally.outcome(
                "weak_sharpness",
                &p.name,
                format!(
                    "alpha = {}, rho = {}, largest consistent alpha {}",
                    ws.alpha, ws.rho, r.max_alpha
                ),
            )
        }
        Err(e) => {
            tally.add(f64::NAN);
            tally.outcome("weak_sharpness", &p.name, e.to_string())
        }
    }
}

/// The feasibility gap is nonnegative at every anchor (take `y = z`) and
/// vanishes on lower-level solutions (monotonicity of F2).
fn gap_signs(p: &HierarchicalProblem, exec: Execution) -> Vec<CheckOutcome> {
    let (feas, opt) = default_anchors(p).expect("filtered");
    let mut nonneg = Tally::new();
    let mut zero = Tally::new();
    match PreparedGap::feasibility(exec, p, &feas.points) {
        Ok(gap) => {
            for z in &feas.points {
                let v = gap.eval(z);
                nonneg.add(-v - 1e-12);
            }
            for z in &opt.points {
                let v = gap.eval(z);
                zero.add(v.abs() - 1e-7 * (1.0 + z.norm()));
            }
        }
        Err(_) => nonneg.add(f64::NAN),
    }
    vec![
        nonneg.outcome("gap_nonnegative", &p.name, format!("{} anchors", feas.len())),
        zero.outcome(
            "gap_vanishes_on_lower_set",
            &p.name,
            format!("{} lower-set points", opt.len()),
        ),
    ]
}

fn gap_convexity(p: &HierarchicalProblem, exec: Execution, pairs: usize, rng: &mut ChaCha8Rng) -> CheckOutcome {
    let (feas, opt) = default_anchors(p).expect("filtered");
    let gaps = [
        PreparedGap::new(exec, &p.data.f2, &p.data.g2, &feas.points),
        PreparedGap::new(exec, &p.data.f1, &p.data.g1, &opt.points),
    ];
    let mut tally = Tally::new();
    for gap in &gaps {
        let Ok(gap) = gap else {
            tally.add(f64::NAN);
            continue;
        };
        for _ in 0..pairs {
            let z1 = p
                .data
                .prox(1.0, 1.0, &uniform(rng, p.dim(), SAMPLE_RADIUS))
                .expect("dimension");
            let z2 = p
                .data
                .prox(1.0, 1.0, &uniform(rng, p.dim(), SAMPLE_RADIUS))
                .expect("dimension");
            let lam: f64 = rng.gen();
            let mid = &z1 * lam + &z2 * (1.0 - lam);
            let (a, b, m) = (gap.eval(&z1), gap.eval(&z2), gap.eval(&mid));
            let chord = lam * a + (1.0 - lam) * b;
            tally.add(m - chord - 1e-9);
        }
    }
    tally.outcome("gap_convexity", &p.name, String::new())
}

/// `8 t² L_k² ≤ 1` along the first 10⁴ iterations of the default schedule.
fn schedule_rule(p: &HierarchicalProblem) -> CheckOutcome {
    let mut tally = Tally::new();
    match Schedule::new(zoo_schedule(p, Variant::Oeg)) {
        Ok(s) => {
            for st in s.iter().take(10_000) {
                tally.add(8.0 * st.t * st.t * st.lipschitz * st.lipschitz - 1.0 - 1e-12);
            }
        }
        Err(_) => tally.add(f64::NAN),
    }
    tally.outcome("step_rule", &p.name, String::new())
}

fn run_job(job: &Job, cfg: &CheckSection, exec: Execution, rng: &mut ChaCha8Rng) -> Vec<CheckOutcome> {
    match job {
        Job::ProxNonexpansive(c) => vec![prox_nonexpansive(c, cfg.pairs, rng)],
        Job::ProxVariational(c) => vec![prox_variational(c, cfg.pairs, rng)],
        // Operator checks use the larger budget of the spot checks.
        Job::Operator(p, upper) => operator_margins(p, *upper, cfg.pairs.max(500), rng),
        Job::Energy(p, v) => vec![energy(p, *v, cfg.energy_iterations)],
        Job::WeakSharp(p) => vec![weak_sharp(p, cfg.pairs, rng)],
        Job::GapSigns(p) => gap_signs(p, exec),
        Job::GapConvexity(p) => vec![gap_convexity(p, exec, cfg.pairs.min(100), rng)],
        Job::ScheduleRule(p) => vec![schedule_rule(p)],
    }
}

/// Run every applicable check on `problems` (plus the fixed prox catalog)
/// and return outcomes in a deterministic order.
pub fn run_checks(problems: &[HierarchicalProblem], cfg: &CheckSection, exec: Execution) -> Vec<CheckOutcome> {
    let problems: Vec<Arc<HierarchicalProblem>> = problems.iter().cloned().map(Arc::new).collect();
    let jobs = jobs(&problems, cfg.inject_fault);
    par::map_range(exec, jobs.len(), |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        run_job(&jobs[i], cfg, Execution::Sequential, &mut rng)
    })
    .into_iter()
    .flatten()
    .collect()
}
