//! The Tikhonov blend of the two levels: `V_σ = F2 + σ·F1` and
//! `G_σ = g2 + σ·g1`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::operator::OperatorSpec;
use crate::prox::ProxTerm;

type CombinedProxFn = dyn Fn(f64, f64, &Vector) -> Vector + Send + Sync;

/// Both levels' data plus the prox of the blended function.
#[derive(Clone)]
pub struct CombinedData {
    pub f2: OperatorSpec,
    pub f1: OperatorSpec,
    pub g2: ProxTerm,
    pub g1: ProxTerm,
    custom_prox: Option<Arc<CombinedProxFn>>,
}

impl fmt::Debug for CombinedData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CombinedData")
            .field("f2", &self.f2)
            .field("f1", &self.f1)
            .field("g2", &self.g2)
            .field("g1", &self.g1)
            .field("custom_prox", &self.custom_prox.is_some())
            .finish()
    }
}

/// The pair `(F2(z), F1(z))`, kept apart so a cached evaluation can be
/// re-weighted when σ changes.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorPair {
    pub f2: Vector,
    pub f1: Vector,
}

impl OperatorPair {
    /// `F2(z) + σ·F1(z)`.
    pub fn weighted(&self, sigma: f64) -> Vector {
        if sigma == 0.0 {
            self.f2.clone()
        } else {
            &self.f2 + sigma * &self.f1
        }
    }
}

impl CombinedData {
    /// Builds the pair and checks that the default prox composition applies.
    /// Use [`with_combined_prox`](Self::with_combined_prox) otherwise.
    pub fn new(f2: OperatorSpec, f1: OperatorSpec, g2: ProxTerm, g1: ProxTerm) -> Result<Self> {
        let data = Self::new_unchecked(f2, f1, g2, g1)?;
        supported_pattern(&data.g2, &data.g1)?;
        Ok(data)
    }

    /// Builds the pair with a user-supplied prox of `step·(g2 + σ·g1)`.
    pub fn with_combined_prox<P>(
        f2: OperatorSpec,
        f1: OperatorSpec,
        g2: ProxTerm,
        g1: ProxTerm,
        prox: P,
    ) -> Result<Self>
    where
        P: Fn(f64, f64, &Vector) -> Vector + Send + Sync + 'static,
    {
        let mut data = Self::new_unchecked(f2, f1, g2, g1)?;
        data.custom_prox = Some(Arc::new(prox));
        Ok(data)
    }

    fn new_unchecked(f2: OperatorSpec, f1: OperatorSpec, g2: ProxTerm, g1: ProxTerm) -> Result<Self> {
        let dim = f2.dim();
        if f1.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: f1.dim(),
            });
        }
        for g in [&g2, &g1] {
            if let Some(d) = g.dim() {
                if d != dim {
                    return Err(Error::Dimension { expected: dim, got: d });
                }
            }
        }
        Ok(Self {
            f2,
            f1,
            g2,
            g1,
            custom_prox: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.f2.dim()
    }

    /// Evaluates both operators once, with dimension and finiteness checks.
    pub fn eval_pair(&self, z: &Vector) -> Result<OperatorPair> {
        Ok(OperatorPair {
            f2: self.f2.eval(z)?,
            f1: self.f1.eval(z)?,
        })
    }

    /// Unchecked variant of [`eval_pair`](Self::eval_pair) for solver loops.
    #[inline]
    pub fn apply_pair(&self, z: &Vector) -> OperatorPair {
        OperatorPair {
            f2: self.f2.apply(z),
            f1: self.f1.apply(z),
        }
    }

    /// `L_σ = L_F2 + σ·L_F1`.
    pub fn lipschitz(&self, sigma: f64) -> f64 {
        combined_lipschitz(self.f2.lipschitz(), self.f1.lipschitz(), sigma)
    }

    /// `prox_{step·(g2 + σ·g1)}(u)`.
    pub fn prox(&self, step: f64, sigma: f64, u: &Vector) -> Result<Vector> {
        match &self.custom_prox {
            Some(p) => Ok(p(step, sigma, u)),
            None => default_combined_prox(&self.g2, &self.g1, step, sigma, u),
        }
    }

    /// `G_σ(z) = g2(z) + σ·g1(z)`, with `0·g1 = 0` so that `G_0 = g2`.
    pub fn value(&self, sigma: f64, z: &Vector) -> f64 {
        let v2 = self.g2.value(z);
        if sigma == 0.0 || v2 == f64::INFINITY {
            return v2;
        }
        v2 + sigma * self.g1.value(z)
    }

    pub fn in_domain(&self, z: &Vector) -> bool {
        self.g2.in_domain(z) && self.g1.in_domain(z)
    }
}

/// `V_σ(z) = F2(z) + σ·F1(z)`, returned together with the raw pair.
pub fn eval_combined_operator(data: &CombinedData, sigma: f64, z: &Vector) -> Result<(Vector, OperatorPair)> {
    if !(sigma >= 0.0) {
        return Err(Error::config(format!("σ must be nonnegative, got {sigma}")));
    }
    linalg::ensure_dim(z, data.dim())?;
    let pair = data.eval_pair(z)?;
    Ok((pair.weighted(sigma), pair))
}

pub fn combined_lipschitz(l2: f64, l1: f64, sigma: f64) -> f64 {
    l2 + sigma * l1
}

fn supported_pattern(g2: &ProxTerm, g1: &ProxTerm) -> Result<()> {
    if g1.is_zero() || g2.is_zero() {
        return Ok(());
    }
    if let (Some(a), Some(b)) = (g2.as_separable(), g1.as_separable()) {
        // Domains must intersect coordinatewise for the sum to be proper.
        for (x, y) in a.iter().zip(b) {
            x.add(y)?;
        }
        return Ok(());
    }
    Err(Error::config(
        "prox of g2 + σ·g1 is not composable for this pair of terms; supply combined_prox directly",
    ))
}

/// Exact prox of `step·(g2 + σ·g1)` for the supported composition patterns:
/// `g1 ≡ 0` (or `σ = 0`), `g2 ≡ 0`, or both separable with 1-D closed forms.
pub fn default_combined_prox(g2: &ProxTerm, g1: &ProxTerm, step: f64, sigma: f64, u: &Vector) -> Result<Vector> {
    if !(step > 0.0) || !(sigma >= 0.0) {
        return Err(Error::config("prox requires step > 0 and σ ≥ 0"));
    }
    if sigma == 0.0 || g1.is_zero() {
        return Ok(g2.prox(step, u));
    }
    if g2.is_zero() {
        return Ok(g1.prox(step * sigma, u));
    }
    match (g2.as_separable(), g1.as_separable()) {
        (Some(a), Some(b)) => {
            if a.len() != u.len() || b.len() != u.len() {
                return Err(Error::Dimension {
                    expected: u.len(),
                    got: a.len().min(b.len()),
                });
            }
            let mut out = Vector::zeros(u.len());
            for i in 0..u.len() {
                out[i] = a[i].add(&b[i].scaled(sigma))?.prox(step, u[i]);
            }
            Ok(out)
        }
        _ => Err(Error::config(
            "prox of g2 + σ·g1 is not composable for this pair of terms; supply combined_prox directly",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;
    use crate::prox::{ProxOracle, ScalarTerm};

    #[test]
    fn combined_operator_examples() {
        let data = CombinedData::new(
            OperatorSpec::identity(2),
            OperatorSpec::zero(2),
            ProxTerm::Zero,
            ProxTerm::Zero,
        )
        .unwrap();
        let (v, _) = eval_combined_operator(&data, 0.5, &vector(&[2.0, -1.0])).unwrap();
        assert_eq!(v, vector(&[2.0, -1.0]));

        let data = CombinedData::new(
            OperatorSpec::zero(2),
            OperatorSpec::identity(2),
            ProxTerm::Zero,
            ProxTerm::Zero,
        )
        .unwrap();
        let (v, pair) = eval_combined_operator(&data, 0.5, &vector(&[2.0, -1.0])).unwrap();
        assert_eq!(v, vector(&[1.0, -0.5]));
        // re-weighting the cached pair needs no new evaluation
        assert_eq!(pair.weighted(2.0), vector(&[4.0, -2.0]));
    }

    #[test]
    fn combined_operator_errors() {
        let data = CombinedData::new(
            OperatorSpec::identity(2),
            OperatorSpec::zero(2),
            ProxTerm::Zero,
            ProxTerm::Zero,
        )
        .unwrap();
        assert!(matches!(
            eval_combined_operator(&data, 0.5, &vector(&[1.0])),
            Err(Error::Dimension { .. })
        ));
        let bad = OperatorSpec::from_fn("F1-bad", 1, 1.0, 0.0, |_| vector(&[f64::NAN]));
        let data = CombinedData::new(OperatorSpec::identity(1), bad, ProxTerm::Zero, ProxTerm::Zero).unwrap();
        match eval_combined_operator(&data, 0.1, &vector(&[1.0])) {
            Err(Error::NonFinite { operator }) => assert_eq!(operator, "F1-bad"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(combined_lipschitz(2.0, 4.0, 0.25), 3.0);
        assert_eq!(combined_lipschitz(0.0, 0.0, 1.0), 0.0);
        assert_eq!(combined_lipschitz(1.0, 1.0, 0.0), 1.0);
    }

    #[test]
    fn default_prox_patterns() {
        let boxed = ProxTerm::box_indicator(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let u = vector(&[2.0, -0.5]);
        for sigma in [0.0, 0.3, 7.0] {
            let p = default_combined_prox(&boxed, &ProxTerm::Zero, 0.1, sigma, &u).unwrap();
            assert_eq!(p, vector(&[1.0, 0.0]));
        }
        let p = default_combined_prox(
            &ProxTerm::Zero,
            &ProxTerm::nonneg_orthant(2),
            0.1,
            0.3,
            &vector(&[-1.0, 2.0]),
        )
        .unwrap();
        assert_eq!(p, vector(&[0.0, 2.0]));
    }

    #[test]
    fn sigma_zero_ignores_upper_term() {
        let g2 = ProxTerm::separable(vec![ScalarTerm::abs(1.0)]);
        let g1 = ProxTerm::separable(vec![ScalarTerm::interval(5.0, 6.0).unwrap()]);
        let u = vector(&[3.0]);
        let p = default_combined_prox(&g2, &g1, 0.5, 0.0, &u).unwrap();
        assert!((p - g2.prox(0.5, &u)).norm() <= 1e-12);
    }

    #[test]
    fn separable_sum_matches_grid_oracle() {
        let g2 = ProxTerm::separable(vec![
            ScalarTerm::hinge_box(1.0, -10.0, 15.0, 0.0, 50.0).unwrap(),
            ScalarTerm::abs(2.0),
        ]);
        let g1 = ProxTerm::separable(vec![ScalarTerm::abs(4.0), ScalarTerm::quadratic(1.0)]);
        let (step, sigma) = (0.2, 0.5);
        let u = vector(&[14.0, 3.0]);
        let p = default_combined_prox(&g2, &g1, step, sigma, &u).unwrap();
        let terms2 = g2.as_separable().unwrap();
        let terms1 = g1.as_separable().unwrap();
        for i in 0..2 {
            let mut best = (f64::INFINITY, 0.0);
            let mut x = -20.0;
            while x <= 60.0 {
                let v = step * (terms2[i].value(x) + sigma * terms1[i].value(x)) + 0.5 * (x - u[i]).powi(2);
                if v < best.0 {
                    best = (v, x);
                }
                x += 1e-4;
            }
            assert!((p[i] - best.1).abs() < 2e-4, "coord {i}: {} vs {}", p[i], best.1);
        }
    }

    #[derive(Debug)]
    struct Opaque;
    impl ProxOracle for Opaque {
        fn prox(&self, _: f64, u: &Vector) -> Vector {
            u.clone()
        }
        fn value(&self, _: &Vector) -> f64 {
            0.0
        }
    }

    #[test]
    fn unsupported_pattern_is_config_error() {
        let g2 = ProxTerm::custom(Opaque);
        let g1 = ProxTerm::nonneg_orthant(1);
        let r = CombinedData::new(OperatorSpec::identity(1), OperatorSpec::zero(1), g2.clone(), g1.clone());
        match r {
            Err(Error::Config(msg)) => assert!(msg.contains("supply combined_prox")),
            other => panic!("unexpected {other:?}"),
        }
        let data =
            CombinedData::with_combined_prox(OperatorSpec::identity(1), OperatorSpec::zero(1), g2, g1, |_, _, u| {
                u.map(|x| x.max(0.0))
            })
            .unwrap();
        assert_eq!(data.prox(0.1, 0.5, &vector(&[-2.0])).unwrap(), vector(&[0.0]));
    }

    #[test]
    fn value_blends_levels() {
        let data = CombinedData::new(
            OperatorSpec::zero(1),
            OperatorSpec::zero(1),
            ProxTerm::separable(vec![ScalarTerm::abs(1.0)]),
            ProxTerm::separable(vec![ScalarTerm::quadratic(2.0)]),
        )
        .unwrap();
        assert_eq!(data.value(0.5, &vector(&[-2.0])), 2.0 + 0.5 * 4.0);
        assert_eq!(data.value(0.0, &vector(&[-2.0])), 2.0);
    }
}
