//! Proper convex lower-semicontinuous functions given through their
//! proximal map.
//!
//! Values are extended reals: `f64::INFINITY` marks points outside the
//! domain. `value` never returns NaN.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// A one-dimensional convex function of the form
///
/// ```text
/// g(x) = q/2·x² + a·x + c + Σ_j w_j·max(x − b_j, 0) + ι_[lo, hi](x),   q ≥ 0, w_j ≥ 0.
/// ```
///
/// This family is closed under nonnegative scaling and addition, and its
/// prox has a closed form: a scan over the kinks followed by a clamp.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarTerm {
    quad: f64,
    linear: f64,
    constant: f64,
    /// Sorted by location; slope jumps are nonnegative.
    kinks: Vec<(f64, f64)>,
    lo: f64,
    hi: f64,
}

impl ScalarTerm {
    pub fn zero() -> Self {
        Self {
            quad: 0.0,
            linear: 0.0,
            constant: 0.0,
            kinks: Vec::new(),
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// Indicator of `[lo, hi]`; either end may be infinite.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(Self { lo, hi, ..Self::zero() })
    }

    /// `λ·max{slope·(x − knee), 0} + ι_[lo, hi](x)`.
    pub fn hinge_box(lambda: f64, slope: f64, knee: f64, lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        if !(lambda >= 0.0) || !slope.is_finite() || !knee.is_finite() {
            return Err(Error::config("hinge requires λ ≥ 0 and finite slope/knee"));
        }
        let w = lambda * slope.abs();
        let mut t = Self { lo, hi, ..Self::zero() };
        if w > 0.0 {
            if slope < 0.0 {
                // |s|·max(knee − x, 0) = |s|(knee − x) + |s|·max(x − knee, 0)
                t.linear = -w;
                t.constant = w * knee;
            }
            t.kinks.push((knee, w));
        }
        Ok(t)
    }

    /// `λ|x|`.
    pub fn abs(lambda: f64) -> Self {
        assert!(lambda >= 0.0);
        Self {
            linear: -lambda,
            kinks: vec![(0.0, 2.0 * lambda)],
            ..Self::zero()
        }
    }

    /// `q/2·x²`.
    pub fn quadratic(q: f64) -> Self {
        assert!(q >= 0.0);
        Self {
            quad: q,
            ..Self::zero()
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn is_zero(&self) -> bool {
        self.quad == 0.0
            && self.linear == 0.0
            && self.constant == 0.0
            && self.kinks.is_empty()
            && self.lo == f64::NEG_INFINITY
            && self.hi == f64::INFINITY
    }

    /// `s·g` for `s > 0`. Indicators are invariant under positive scaling.
    pub fn scaled(&self, s: f64) -> Self {
        assert!(s > 0.0, "scaling factor must be positive");
        Self {
            quad: self.quad * s,
            linear: self.linear * s,
            constant: self.constant * s,
            kinks: self.kinks.iter().map(|&(b, w)| (b, w * s)).collect(),
            lo: self.lo,
            hi: self.hi,
        }
    }

    /// Pointwise sum. Fails when the domains do not intersect.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            return Err(Error::Domain("sum of scalar terms has empty domain".into()));
        }
        let mut kinks: Vec<(f64, f64)> = self.kinks.iter().chain(other.kinks.iter()).cloned().collect();
        kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            quad: self.quad + other.quad,
            linear: self.linear + other.linear,
            constant: self.constant + other.constant,
            kinks,
            lo,
            hi,
        })
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn value(&self, x: f64) -> f64 {
        if !self.in_domain(x) || x.is_nan() {
            return f64::INFINITY;
        }
        let mut v = 0.5 * self.quad * x * x + self.linear * x + self.constant;
        for &(b, w) in &self.kinks {
            if x > b {
                v += w * (x - b);
            }
        }
        v
    }

    /// Exact minimizer of `step·g(x) + ½(x − u)²`.
    pub fn prox(&self, step: f64, u: f64) -> f64 {
        debug_assert!(step > 0.0);
        let denom = 1.0 + step * self.quad;
        // Candidates decrease with the segment index; the first one that does
        // not overshoot its segment's right end is the answer, clipped at the
        // segment's left end (a kink) if it undershoots.
        let mut slope = self.linear;
        let mut left = f64::NEG_INFINITY;
        let mut x = None;
        for &(b, w) in &self.kinks {
            let cand = (u - step * slope) / denom;
            if cand <= b {
                x = Some(cand.max(left));
                break;
            }
            slope += w;
            left = b;
        }
        let x = x.unwrap_or_else(|| ((u - step * slope) / denom).max(left));
        x.clamp(self.lo, self.hi)
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::config(format!(
            "invalid interval [{lo}, {hi}]: lower bound exceeds upper bound"
        )));
    }
    Ok(())
}

/// Componentwise clamp of `u` into `[lower, upper]`.
pub fn prox_box(lower: &Vector, upper: &Vector, u: &Vector) -> Result<Vector> {
    if lower.len() != u.len() || upper.len() != u.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            got: lower.len().min(upper.len()),
        });
    }
    for (l, h) in lower.iter().zip(upper.iter()) {
        check_interval(*l, *h)?;
    }
    Ok(Vector::from_fn(u.len(), |i, _| u[i].clamp(lower[i], upper[i])))
}

/// Scalar-bound variant of [`prox_box`].
pub fn prox_box_scalar(lower: f64, upper: f64, u: f64) -> Result<f64> {
    check_interval(lower, upper)?;
    Ok(u.clamp(lower, upper))
}

/// Prox of `x ↦ λ·max{slope·(x − knee), 0} + ι_[lower, upper](x)` with step
/// `step`.
pub fn prox_hinge_box(lambda: f64, slope: f64, knee: f64, lower: f64, upper: f64, step: f64, u: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::config("prox step must be positive"));
    }
    Ok(ScalarTerm::hinge_box(lambda, slope, knee, lower, upper)?.prox(step, u))
}

/// User-supplied prox oracle for functions outside the separable family.
pub trait ProxOracle: Send + Sync + fmt::Debug {
    /// Dimension the oracle accepts, when fixed.
    fn dim(&self) -> Option<usize> {
        None
    }
    fn prox(&self, step: f64, u: &Vector) -> Vector;
    fn value(&self, z: &Vector) -> f64;
    fn in_domain(&self, z: &Vector) -> bool {
        self.value(z).is_finite()
    }
}

/// A convex function available through prox, value and domain oracles.
#[derive(Clone, Debug)]
pub enum ProxTerm {
    /// `g ≡ 0` in any dimension.
    Zero,
    /// `g(z) = Σ_i g_i(z_i)` with each `g_i` a [`ScalarTerm`].
    Separable(Vec<ScalarTerm>),
    Custom(Arc<dyn ProxOracle>),
}

impl ProxTerm {
    pub fn separable(terms: Vec<ScalarTerm>) -> Self {
        ProxTerm::Separable(terms)
    }

    /// Indicator of the box `[lower, upper]`.
    pub fn box_indicator(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        let terms = lower
            .iter()
            .zip(upper)
            .map(|(&l, &h)| ScalarTerm::interval(l, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProxTerm::Separable(terms))
    }

    pub fn nonneg_orthant(dim: usize) -> Self {
        ProxTerm::Separable(vec![ScalarTerm::interval(0.0, f64::INFINITY).unwrap(); dim])
    }

    pub fn custom(oracle: impl ProxOracle + 'static) -> Self {
        ProxTerm::Custom(Arc::new(oracle))
    }

    /// Block-diagonal sum `g(z) = Σ_b g_b(z_b)` over consecutive blocks of the
    /// given sizes. Stays separable when every block is.
    pub fn blocks(parts: Vec<(ProxTerm, usize)>) -> Result<Self> {
        for (term, size) in &parts {
            if let Some(d) = term.dim() {
                if d != *size {
                    return Err(Error::Dimension {
                        expected: *size,
                        got: d,
                    });
                }
            }
        }
        if parts.iter().all(|(t, _)| t.is_zero()) {
            return Ok(ProxTerm::Zero);
        }
        if parts.iter().all(|(t, _)| !matches!(t, ProxTerm::Custom(_))) {
            let mut terms = Vec::new();
            for (t, size) in &parts {
                match t {
                    ProxTerm::Zero => terms.extend(std::iter::repeat_n(ScalarTerm::zero(), *size)),
                    ProxTerm::Separable(s) => terms.extend(s.iter().cloned()),
                    ProxTerm::Custom(_) => unreachable!(),
                }
            }
            return Ok(ProxTerm::Separable(terms));
        }
        Ok(ProxTerm::custom(BlockOracle { parts }))
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            ProxTerm::Zero => None,
            ProxTerm::Separable(t) => Some(t.len()),
            ProxTerm::Custom(o) => o.dim(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ProxTerm::Zero => true,
            ProxTerm::Separable(t) => t.iter().all(ScalarTerm::is_zero),
            ProxTerm::Custom(_) => false,
        }
    }

    pub fn as_separable(&self) -> Option<&[ScalarTerm]> {
        match self {
            ProxTerm::Separable(t) => Some(t),
            _ => None,
        }
    }

    /// `prox_{step·g}(u)`.
    pub fn prox(&self, step: f64, u: &Vector) -> Vector {
        match self {
            ProxTerm::Zero => u.clone(),
            ProxTerm::Separable(t) => {
                debug_assert_eq!(t.len(), u.len());
                Vector::from_fn(u.len(), |i, _| t[i].prox(step, u[i]))
            }
            ProxTerm::Custom(o) => o.prox(step, u),
        }
    }

    pub fn value(&self, z: &Vector) -> f64 {
        match self {
            ProxTerm::Zero => 0.0,
            ProxTerm::Separable(t) => {
                let mut v = 0.0;
                for (term, &x) in t.iter().zip(z.iter()) {
                    v += term.value(x);
                    if v == f64::INFINITY {
                        break;
                    }
                }
                v
            }
            ProxTerm::Custom(o) => {
                let v = o.value(z);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            }
        }
    }

    pub fn in_domain(&self, z: &Vector) -> bool {
        match self {
            ProxTerm::Zero => true,
            ProxTerm::Separable(t) => t.iter().zip(z.iter()).all(|(term, &x)| term.in_domain(x)),
            ProxTerm::Custom(o) => o.in_domain(z),
        }
    }
}

#[derive(Debug)]
struct BlockOracle {
    parts: Vec<(ProxTerm, usize)>,
}

impl BlockOracle {
    fn split<'a>(&'a self, z: &'a Vector) -> impl Iterator<Item = (&'a ProxTerm, Vector)> + 'a {
        let mut offset = 0;
        self.parts.iter().map(move |(t, n)| {
            let block = z.rows(offset, *n).into_owned();
            offset += n;
            (t, block)
        })
    }
}

impl ProxOracle for BlockOracle {
    fn dim(&self) -> Option<usize> {
        Some(self.parts.iter().map(|(_, n)| n).sum())
    }

    fn prox(&self, step: f64, u: &Vector) -> Vector {
        let mut out = Vec::with_capacity(u.len());
        for (t, block) in self.split(u) {
            out.extend(t.prox(step, &block).iter());
        }
        Vector::from_vec(out)
    }

    fn value(&self, z: &Vector) -> f64 {
        self.split(z).map(|(t, b)| t.value(&b)).sum()
    }

    fn in_domain(&self, z: &Vector) -> bool {
        self.split(z).all(|(t, b)| t.in_domain(&b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    /// Grid minimizer of `step·g(x) + ½(x − u)²` over `[lo, hi]`.
    fn brute_prox(g: &ScalarTerm, step: f64, u: f64, lo: f64, hi: f64, h: f64) -> f64 {
        let n = ((hi - lo) / h).round() as usize;
        let mut best = (f64::INFINITY, lo);
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let v = step * g.value(x) + 0.5 * (x - u) * (x - u);
            if v < best.0 {
                best = (v, x);
            }
        }
        best.1
    }

    #[test]
    fn box_clamp_examples() {
        assert_eq!(prox_box_scalar(0.0, 50.0, 60.0).unwrap(), 50.0);
        assert_eq!(prox_box_scalar(-100.0, 50.0, -37.0).unwrap(), -37.0);
        assert_eq!(prox_box_scalar(0.0, 100.0, -3.0).unwrap(), 0.0);
        assert!(prox_box_scalar(1.0, 0.0, 0.5).is_err());
        let lo = vector(&[0.0, -1.0]);
        let hi = vector(&[1.0, -2.0]);
        assert!(prox_box(&lo, &hi, &vector(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn hinge_box_examples() {
        // inactive hinge, interior
        assert_eq!(prox_hinge_box(1.0, -10.0, 15.0, 0.0, 50.0, 0.1, 20.0).unwrap(), 20.0);
        // pull of 10·step = 1 overshoots the knee
        let x = prox_hinge_box(1.0, -10.0, 15.0, 0.0, 50.0, 0.1, 14.6).unwrap();
        assert!((x - 15.0).abs() < 1e-12);
        // active hinge piece: u + 10·step
        let x = prox_hinge_box(1.0, -10.0, 15.0, 0.0, 50.0, 0.1, 5.0).unwrap();
        assert!((x - 6.0).abs() < 1e-12);
        assert!(prox_hinge_box(1.0, -10.0, 15.0, 5.0, 0.0, 0.1, 5.0).is_err());
    }

    #[test]
    fn hinge_box_matches_grid_oracle() {
        let g = ScalarTerm::hinge_box(1.0, -10.0, 15.0, 0.0, 50.0).unwrap();
        for &(u, expect) in &[(14.6, 15.0), (5.0, 6.0)] {
            let oracle = brute_prox(&g, 0.1, u, 0.0, 50.0, 1e-6);
            assert!((oracle - expect).abs() < 2e-6, "u={u}: oracle {oracle}");
        }
    }

    #[test]
    fn hinge_value() {
        let g = ScalarTerm::hinge_box(1.0, -10.0, 15.0, 0.0, 50.0).unwrap();
        assert_eq!(g.value(10.0), 50.0);
        assert_eq!(g.value(15.0), 0.0);
        assert_eq!(g.value(40.0), 0.0);
        assert_eq!(g.value(-1.0), f64::INFINITY);
        let g = ScalarTerm::hinge_box(2.0, 3.0, 1.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!(g.value(2.0), 6.0);
        assert_eq!(g.value(0.0), 0.0);
    }

    #[test]
    fn abs_soft_threshold() {
        let g = ScalarTerm::abs(1.0);
        assert_eq!(g.prox(0.5, 2.0), 1.5);
        assert_eq!(g.prox(0.5, -2.0), -1.5);
        assert_eq!(g.prox(0.5, 0.3), 0.0);
        assert_eq!(g.value(-3.0), 3.0);
    }

    #[test]
    fn quadratic_prox() {
        let g = ScalarTerm::quadratic(2.0);
        assert!((g.prox(0.5, 4.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sum_of_terms_matches_grid_oracle() {
        let a = ScalarTerm::hinge_box(1.0, -10.0, 15.0, 0.0, 50.0).unwrap();
        let b = ScalarTerm::abs(3.0).add(&ScalarTerm::quadratic(0.2)).unwrap();
        let s = a.add(&b.scaled(0.7)).unwrap();
        for &u in &[-5.0, 3.0, 14.9, 16.0, 33.0, 60.0] {
            let x = s.prox(0.3, u);
            let oracle = brute_prox(&s, 0.3, u, 0.0, 50.0, 1e-5);
            assert!((x - oracle).abs() < 2e-5, "u={u}: {x} vs {oracle}");
        }
    }

    #[test]
    fn empty_domain_sum_is_error() {
        let a = ScalarTerm::interval(0.0, 1.0).unwrap();
        let b = ScalarTerm::interval(2.0, 3.0).unwrap();
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn blocks_flatten_separable_parts() {
        let t = ProxTerm::blocks(vec![(ProxTerm::nonneg_orthant(2), 2), (ProxTerm::Zero, 1)]).unwrap();
        assert_eq!(t.dim(), Some(3));
        let p = t.prox(1.0, &vector(&[-1.0, 2.0, -3.0]));
        assert_eq!(p, vector(&[0.0, 2.0, -3.0]));
        assert_eq!(t.value(&vector(&[-1.0, 0.0, 0.0])), f64::INFINITY);
    }

    #[derive(Debug)]
    struct Ball;

    impl ProxOracle for Ball {
        fn prox(&self, _step: f64, u: &Vector) -> Vector {
            let n = u.norm();
            if n <= 1.0 {
                u.clone()
            } else {
                u / n
            }
        }
        fn value(&self, z: &Vector) -> f64 {
            if z.norm() <= 1.0 + 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        }
    }

    #[test]
    fn blocks_with_custom_part() {
        let t = ProxTerm::blocks(vec![(ProxTerm::custom(Ball), 2), (ProxTerm::nonneg_orthant(1), 1)]).unwrap();
        assert!(matches!(t, ProxTerm::Custom(_)));
        let p = t.prox(1.0, &vector(&[3.0, 4.0, -1.0]));
        assert!((&p - vector(&[0.6, 0.8, 0.0])).norm() < 1e-12);
        assert!(t.in_domain(&p));
        assert!(!t.in_domain(&vector(&[3.0, 4.0, 0.0])));
    }
}
