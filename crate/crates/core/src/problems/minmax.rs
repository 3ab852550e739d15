//! Linearly constrained saddle problems
//!
//! ```text
//! min_x max_y  φ(x) + f1(x) + ⟨x, K y⟩ − f2(y) − ψ(y)   s.t.  A x + B y = c
//! ```
//!
//! cast as a hierarchy: the lower level is the least-squares residual of the
//! constraint, the upper level the saddle operator.

use crate::combined::CombinedData;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::operator::OperatorSpec;
use crate::problem::HierarchicalProblem;
use crate::prox::ProxTerm;

#[derive(Clone, Debug)]
pub struct MinMaxSpec {
    /// `dim_x × dim_y`.
    pub coupling: Matrix,
    pub grad_f1: OperatorSpec,
    pub grad_f2: OperatorSpec,
    pub phi: ProxTerm,
    pub psi: ProxTerm,
    /// `m × dim_x`.
    pub a: Matrix,
    /// `m × dim_y`.
    pub b: Matrix,
    pub c: Vector,
}

impl MinMaxSpec {
    pub fn dims(&self) -> (usize, usize) {
        (self.coupling.nrows(), self.coupling.ncols())
    }

    fn validate(&self) -> Result<()> {
        let (nx, ny) = self.dims();
        let m = self.c.len();
        let checks = [
            ("grad_f1", self.grad_f1.dim(), nx),
            ("grad_f2", self.grad_f2.dim(), ny),
            ("A rows", self.a.nrows(), m),
            ("A cols", self.a.ncols(), nx),
            ("B rows", self.b.nrows(), m),
            ("B cols", self.b.ncols(), ny),
        ];
        for (what, got, expected) in checks {
            if got != expected {
                return Err(Error::config(format!("min-max {what}: expected {expected}, got {got}")));
            }
        }
        for (what, term, n) in [("phi", &self.phi, nx), ("psi", &self.psi, ny)] {
            if let Some(d) = term.dim() {
                if d != n {
                    return Err(Error::config(format!(
                        "min-max {what}: expected dimension {n}, got {d}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `F1(x, y) = (∇f1(x) + K y, ∇f2(y) − Kᵀx)`,
/// `F2(x, y) = [A B]ᵀ([A B](x, y) − c)`, `g1 = φ ⊕ ψ`, `g2 = 0`.
pub fn build_minmax(name: &str, spec: MinMaxSpec) -> Result<HierarchicalProblem> {
    spec.validate()?;
    let (nx, ny) = spec.dims();
    let n = nx + ny;

    let mut ab = Matrix::zeros(spec.c.len(), n);
    ab.view_mut((0, 0), (spec.c.len(), nx)).copy_from(&spec.a);
    ab.view_mut((0, nx), (spec.c.len(), ny)).copy_from(&spec.b);
    let f2 = OperatorSpec::affine(format!("{name}.F2"), ab.transpose() * &ab, -(ab.transpose() * &spec.c));

    let mut skew = Matrix::zeros(n, n);
    skew.view_mut((0, nx), (nx, ny)).copy_from(&spec.coupling);
    skew.view_mut((nx, 0), (ny, nx))
        .copy_from(&(-spec.coupling.transpose()));
    let f1 = match (spec.grad_f1.affine_parts(), spec.grad_f2.affine_parts()) {
        (Some((m1, c1)), Some((m2, c2))) => {
            let mut m = skew;
            let mut m_x = m.view_mut((0, 0), (nx, nx));
            m_x += m1;
            let mut m_y = m.view_mut((nx, nx), (ny, ny));
            m_y += m2;
            let mut c = Vector::zeros(n);
            c.rows_mut(0, nx).copy_from(c1);
            c.rows_mut(nx, ny).copy_from(c2);
            OperatorSpec::affine(format!("{name}.F1"), m, c)
        }
        _ => {
            let lip = spec.grad_f1.lipschitz().max(spec.grad_f2.lipschitz()) + crate::linalg::affine_lipschitz(&skew);
            let mu = spec.grad_f1.strong_mono().min(spec.grad_f2.strong_mono());
            let (g1, g2) = (spec.grad_f1.clone(), spec.grad_f2.clone());
            OperatorSpec::from_fn(format!("{name}.F1"), n, lip, mu, move |z| {
                let x = z.rows(0, nx).into_owned();
                let y = z.rows(nx, ny).into_owned();
                let mut out = &skew * z;
                let mut top = out.rows_mut(0, nx);
                top += g1.apply(&x);
                let mut bottom = out.rows_mut(nx, ny);
                bottom += g2.apply(&y);
                out
            })
        }
    };
    let g1 = ProxTerm::blocks(vec![(spec.phi, nx), (spec.psi, ny)])?;
    let data = CombinedData::new(f2, f1, ProxTerm::Zero, g1)?;
    Ok(HierarchicalProblem::new(name, data))
}
