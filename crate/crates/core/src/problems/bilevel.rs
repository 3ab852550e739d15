//! Simple bilevel optimization: minimize `f1 + g1` over
//! `argmin (f2 + g2)`.

use crate::combined::CombinedData;
use crate::error::Result;
use crate::linalg::Vector;
use crate::operator::OperatorSpec;
use crate::problem::HierarchicalProblem;
use crate::prox::ProxTerm;

pub fn build_simple_bilevel(
    grad_f1: OperatorSpec,
    g1: ProxTerm,
    grad_f2: OperatorSpec,
    g2: ProxTerm,
) -> Result<HierarchicalProblem> {
    let data = CombinedData::new(grad_f2, grad_f1, g2, g1)?;
    Ok(HierarchicalProblem::new("bilevel", data))
}

/// `∇ ½ max(‖x‖ − 1, 0)²`; vanishes on the unit ball.
pub fn flat_ball_gradient(dim: usize) -> OperatorSpec {
    OperatorSpec::from_fn("flat_ball", dim, 1.0, 0.0, |x: &Vector| {
        let r = x.norm();
        if r <= 1.0 {
            Vector::zeros(x.len())
        } else {
            x * (1.0 - 1.0 / r)
        }
    })
}

pub fn flat_ball_value(x: &Vector) -> f64 {
    0.5 * (x.norm() - 1.0).max(0.0).powi(2)
}
