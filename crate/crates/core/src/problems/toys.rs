//! Small problems with closed-form answers.

use crate::combined::CombinedData;
use crate::linalg::{vector, Matrix};
use crate::operator::OperatorSpec;
use crate::problem::{HierarchicalProblem, LowerSet};
use crate::prox::{ProxTerm, ScalarTerm};

fn shift(name: &str, c: f64) -> OperatorSpec {
    OperatorSpec::affine_with_constants(name, Matrix::identity(1, 1), vector(&[-c]), 1.0, 1.0)
}

/// `F1(z) = z − 3` (μ = 1), `F2 ≡ 0` declared with `L = 1`, no constraints.
/// The lower level is vacuous and the solution is `3`.
pub fn strong_toy() -> HierarchicalProblem {
    let data = CombinedData::new(
        OperatorSpec::zero(1).with_lipschitz(1.0),
        shift("z-3", 3.0),
        ProxTerm::Zero,
        ProxTerm::Zero,
    )
    .expect("zero prox terms");
    HierarchicalProblem::new("strong_toy", data)
        .with_solution(vector(&[3.0]))
        .expect("in domain")
        .with_lower_set(LowerSet::Whole)
}

/// `F2(z) = z`, `F1(z) = z − 3`. The lower level pins `z = 0`.
pub fn cross_toy() -> HierarchicalProblem {
    let data = CombinedData::new(
        OperatorSpec::identity(1),
        shift("z-3", 3.0),
        ProxTerm::Zero,
        ProxTerm::Zero,
    )
    .expect("zero prox terms");
    HierarchicalProblem::new("cross_toy", data)
        .with_solution(vector(&[0.0]))
        .expect("in domain")
        .with_lower_set(LowerSet::Point(vector(&[0.0])))
}

fn sharp_toy(name: &str, g2: ScalarTerm, alpha: f64, rho: f64) -> HierarchicalProblem {
    let data = CombinedData::new(
        OperatorSpec::zero(1),
        shift("z-1", 1.0),
        ProxTerm::separable(vec![g2]),
        ProxTerm::Zero,
    )
    .expect("separable");
    HierarchicalProblem::new(name, data)
        .with_solution(vector(&[0.0]))
        .expect("in domain")
        .with_lower_set(LowerSet::Point(vector(&[0.0])))
        .with_weak_sharp(alpha, rho)
        .expect("valid constants")
}

/// `g2 = |z|`, `F2 = 0`: `S2 = {0}`, weakly sharp with `α = ρ = 1`.
pub fn abs_toy() -> HierarchicalProblem {
    sharp_toy("abs_toy", ScalarTerm::abs(1.0), 1.0, 1.0)
}

/// `g2 = z²`, `F2 = 0`: `S2 = {0}`, weakly sharp with `α = ρ = 2`.
pub fn quad_toy() -> HierarchicalProblem {
    sharp_toy("quad_toy", ScalarTerm::quadratic(2.0), 2.0, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toys_are_consistent() {
        let s = strong_toy();
        assert_eq!(s.data.f1.strong_mono(), 1.0);
        assert_eq!(s.data.f1.apply(&vector(&[3.0]))[0], 0.0);
        let c = cross_toy();
        assert_eq!(c.data.f2.apply(&vector(&[0.0]))[0], 0.0);
        assert_eq!(quad_toy().data.g2.value(&vector(&[3.0])), 9.0);
        assert_eq!(abs_toy().data.g2.value(&vector(&[-3.0])), 3.0);
    }
}
