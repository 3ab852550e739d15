//! Absolute value equation `Ax + |x| = b` from a fourth-order finite
//! difference discretization of `−u'' + |u| = x² − 1` on `(0, 1)` with
//! `u(0) = −1`, `u(1) = 0`, posed as a min-max problem
//!
//! ```text
//! min_{x ≥ 0} max_{y, w ≥ 0} (b − (A + I)x)ᵀy   s.t.  x − (I − A)ᵀy − w = 0.
//! ```
//!
//! The variable is `z = (x, y, w) ∈ ℝ^{3n}`. The grid solution is negative,
//! so it is not the `x` block itself; it is recovered as
//! `u = x + M z / σ` with `M = [I, −(I − A)ᵀ, −I]`, i.e. the `x` block
//! corrected by the multiplier estimate of the penalized constraint.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::operator::OperatorSpec;
use crate::problem::{HierarchicalProblem, Monitor};
use crate::prox::ProxTerm;

use super::minmax::{build_minmax, MinMaxSpec};

pub const U_LEFT: f64 = -1.0;
pub const U_RIGHT: f64 = 0.0;

pub fn source(x: f64) -> f64 {
    x * x - 1.0
}

pub fn analytic_u(x: f64) -> f64 {
    0.1961 * x.sin() - 4.0 * x.cos() - x * x + 3.0
}

#[derive(Clone, Debug)]
pub struct GaveSpec {
    pub n: usize,
    pub h: f64,
    pub a: Matrix,
    pub b: Vector,
    /// Grid nodes `x_i = i·h`, `i = 1..n`.
    pub nodes: Vector,
}

impl GaveSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::config(format!(
                "GAVE grid needs n ≥ 5 (stencil spans 5 points), got {n}"
            )));
        }
        let h = 1.0 / (n as f64 + 1.0);
        let s = 12.0 * h * h;
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for (off, c) in [(-2i64, 1.0), (-1, -16.0), (0, 30.0), (1, -16.0), (2, 1.0)] {
                let j = i as i64 + off;
                if (0..n as i64).contains(&j) {
                    a[(i, j as usize)] = c;
                }
            }
        }
        for (j, c) in [20.0, -6.0, -4.0, 1.0].into_iter().enumerate() {
            a[(0, j)] = c;
            a[(n - 1, n - 1 - j)] = c;
        }
        a /= s;
        let nodes = Vector::from_fn(n, |i, _| (i + 1) as f64 * h);
        let mut b = nodes.map(source);
        b[0] += 11.0 * U_LEFT / s;
        b[1] -= U_LEFT / s;
        b[n - 2] -= U_RIGHT / s;
        b[n - 1] += 11.0 * U_RIGHT / s;
        Ok(Self { n, h, a, b, nodes })
    }

    pub fn analytic(&self) -> Vector {
        self.nodes.map(analytic_u)
    }

    /// `‖Ax + |x| − b‖ / ‖b‖`.
    pub fn relative_residual(&self, x: &Vector) -> f64 {
        (&self.a * x + x.abs() - &self.b).norm() / self.b.norm()
    }

    /// `M = [I, −(I − A)ᵀ, −I]`.
    pub fn constraint_matrix(&self) -> Matrix {
        let n = self.n;
        let mut m = Matrix::zeros(n, 3 * n);
        m.view_mut((0, 0), (n, n)).fill_with_identity();
        m.view_mut((0, n), (n, n))
            .copy_from(&(-(Matrix::identity(n, n) - &self.a).transpose()));
        let mut w = m.view_mut((0, 2 * n), (n, n));
        w.fill_with_identity();
        w.neg_mut();
        m
    }

    /// Picard iteration `x ← A⁻¹(b − |x|)` from `x = 0`.
    pub fn oracle(&self) -> Result<Vector> {
        let lu = self.a.clone().lu();
        let mut x = Vector::zeros(self.n);
        for _ in 0..500 {
            let next = lu
                .solve(&(&self.b - x.abs()))
                .ok_or_else(|| Error::config("GAVE matrix is singular"))?;
            let done = (&next - &x).amax() <= 1e-15 * (1.0 + next.amax());
            x = next;
            if done {
                break;
            }
        }
        Ok(x)
    }

    /// Grid estimate `x + Mz/σ` read off an iterate.
    pub fn recover(&self, z: &Vector, sigma: f64) -> Vector {
        self.recover_with(&self.constraint_matrix(), z, sigma)
    }

    fn recover_with(&self, m: &Matrix, z: &Vector, sigma: f64) -> Vector {
        z.rows(0, self.n) + m * z / sigma
    }

    /// `A v − (−v'' + boundary terms)` for a smooth `v`, row by row.
    /// Interior rows shrink like `h⁴`.
    pub fn stencil_residual(&self, v: impl Fn(f64) -> f64, v_dd: impl Fn(f64) -> f64) -> Vector {
        let s = 12.0 * self.h * self.h;
        let n = self.n;
        let (v0, v1) = (v(0.0), v(1.0));
        let mut rhs = self.nodes.map(|x| -v_dd(x));
        rhs[0] += 11.0 * v0 / s;
        rhs[1] -= v0 / s;
        rhs[n - 2] -= v1 / s;
        rhs[n - 1] += 11.0 * v1 / s;
        &self.a * self.nodes.map(v) - rhs
    }

    pub fn minmax_spec(&self) -> MinMaxSpec {
        let n = self.n;
        let apb = &self.a + Matrix::identity(n, n);
        let mut coupling = Matrix::zeros(n, 2 * n);
        coupling.view_mut((0, 0), (n, n)).copy_from(&(-apb.transpose()));
        let mut grad_f2_c = Vector::zeros(2 * n);
        grad_f2_c.rows_mut(0, n).copy_from(&(-&self.b));
        let mut b_c = Matrix::zeros(n, 2 * n);
        b_c.view_mut((0, 0), (n, n))
            .copy_from(&(-(Matrix::identity(n, n) - &self.a).transpose()));
        b_c.view_mut((0, n), (n, n)).copy_from(&(-Matrix::identity(n, n)));
        MinMaxSpec {
            coupling,
            grad_f1: OperatorSpec::zero(n),
            grad_f2: OperatorSpec::affine_with_constants(
                "gave.grad_f2",
                Matrix::zeros(2 * n, 2 * n),
                grad_f2_c,
                0.0,
                0.0,
            ),
            phi: ProxTerm::nonneg_orthant(n),
            psi: ProxTerm::blocks(vec![(ProxTerm::Zero, n), (ProxTerm::nonneg_orthant(n), n)]).expect("block dims"),
            a: Matrix::identity(n, n),
            b: b_c,
            c: Vector::zeros(n),
        }
    }

    /// The hierarchical problem, with a monitor reporting the relative AVE
    /// residual of the recovered grid function.
    pub fn problem(&self) -> Result<HierarchicalProblem> {
        let p = build_minmax("gave", self.minmax_spec())?;
        let spec = self.clone();
        let m = self.constraint_matrix();
        Ok(p.with_monitor(Monitor::new("ave_residual", move |z, sigma| {
            spec.relative_residual(&spec.recover_with(&m, z, sigma))
        })))
    }
}

pub fn build_gave(n: usize) -> Result<HierarchicalProblem> {
    GaveSpec::new(n)?.problem()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_and_rhs_entries() {
        let g = GaveSpec::new(9).unwrap();
        assert!((g.h - 0.1).abs() < 1e-15);
        assert!((g.a[(4, 4)] - 250.0).abs() < 1e-9);
        assert!((g.a[(4, 2)] - 1.0 / 0.12).abs() < 1e-9);
        assert!((g.a[(0, 0)] - 20.0 / 0.12).abs() < 1e-9);
        assert!((g.a[(8, 5)] - 1.0 / 0.12).abs() < 1e-9);
        assert!((g.b[0] - (-0.99 - 11.0 / 0.12)).abs() < 1e-9);
        assert!((g.b[0] + 92.6567).abs() < 1e-4);
        assert!((g.b[1] - (0.04 - 1.0 + 1.0 / 0.12)).abs() < 1e-9);
        assert_eq!(analytic_u(0.0), -1.0);
        assert!(GaveSpec::new(4).is_err());
    }

    #[test]
    fn oracle_solves_the_ave() {
        let g = GaveSpec::new(9).unwrap();
        let x = g.oracle().unwrap();
        assert!(g.relative_residual(&x) <= 1e-10);
        assert!((x - g.analytic()).amax() < 5e-3);
    }

    #[test]
    fn interior_truncation_is_fourth_order() {
        let v = |x: f64| (2.0 * x).sin() + x.powi(3);
        let v_dd = |x: f64| -4.0 * (2.0 * x).sin() + 6.0 * x;
        let err = |n: usize| {
            let g = GaveSpec::new(n).unwrap();
            let r = g.stencil_residual(v, v_dd);
            r.rows(1, n - 2).amax()
        };
        // h halves from n = 9 to n = 19
        let order = (err(9) / err(19)).log2();
        assert!(order > 3.5, "observed order {order}");
    }

    #[test]
    fn operators_match_the_reformulation() {
        let g = GaveSpec::new(6).unwrap();
        let p = g.problem().unwrap();
        let n = g.n;
        let z = Vector::from_fn(3 * n, |i, _| (i as f64 * 0.37).sin());
        let (x, y) = (z.rows(0, n).into_owned(), z.rows(n, n).into_owned());
        let apb = &g.a + Matrix::identity(n, n);
        let f1 = p.data.f1.apply(&z);
        assert!((f1.rows(0, n) + apb.transpose() * &y).amax() < 1e-9);
        assert!((f1.rows(n, n) + (&g.b - &apb * &x)).amax() < 1e-9);
        assert_eq!(f1.rows(2 * n, n).amax(), 0.0);
        let m = g.constraint_matrix();
        assert!((p.data.f2.apply(&z) - m.transpose() * (&m * &z)).amax() < 1e-6);
        assert!(p.data.g1.in_domain(&z.abs()));
        assert!(!p.data.g1.in_domain(&(-z.abs())));
        assert!(p.data.g2.is_zero());
    }
}
