//! Monotone single-valued operators `F: ℝⁿ → ℝⁿ` with declared constants.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

type EvalFn = dyn Fn(&Vector) -> Vector + Send + Sync;

/// A monotone map with a declared Lipschitz constant and an optional
/// strong-monotonicity modulus (`0.0` when merely monotone).
///
/// The constants are declarations, not measurements. [`pair_margins`]
/// checks them on sample pairs.
///
/// [`pair_margins`]: OperatorSpec::pair_margins
#[derive(Clone)]
pub struct OperatorSpec {
    name: String,
    dim: usize,
    eval: Arc<EvalFn>,
    lipschitz: f64,
    strong_mono: f64,
    affine: Option<(Matrix, Vector)>,
}

impl fmt::Debug for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("strong_mono", &self.strong_mono)
            .field("affine", &self.affine.is_some())
            .finish()
    }
}

impl OperatorSpec {
    pub fn from_fn<F>(name: impl Into<String>, dim: usize, lipschitz: f64, strong_mono: f64, f: F) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        assert!(lipschitz >= 0.0 && strong_mono >= 0.0);
        Self {
            name: name.into(),
            dim,
            eval: Arc::new(f),
            lipschitz,
            strong_mono,
            affine: None,
        }
    }

    /// `z ↦ Mz + c`. The Lipschitz constant comes from power iteration
    /// (inflated by 1%) and the strong-monotonicity modulus from the
    /// symmetric part of `M`.
    pub fn affine(name: impl Into<String>, m: Matrix, c: Vector) -> Self {
        assert!(m.is_square() && m.nrows() == c.len(), "affine operator must be square");
        let lipschitz = linalg::affine_lipschitz(&m);
        let strong_mono = linalg::strong_monotonicity(&m);
        Self::affine_with_constants(name, m, c, lipschitz, strong_mono)
    }

    pub fn affine_with_constants(
        name: impl Into<String>,
        m: Matrix,
        c: Vector,
        lipschitz: f64,
        strong_mono: f64,
    ) -> Self {
        let dim = c.len();
        let (mm, cc) = (m.clone(), c.clone());
        let mut op = Self::from_fn(name, dim, lipschitz, strong_mono, move |z| &mm * z + &cc);
        op.affine = Some((m, c));
        op
    }

    pub fn zero(dim: usize) -> Self {
        Self::affine_with_constants("zero", Matrix::zeros(dim, dim), Vector::zeros(dim), 0.0, 0.0)
    }

    pub fn identity(dim: usize) -> Self {
        Self::affine_with_constants("identity", Matrix::identity(dim, dim), Vector::zeros(dim), 1.0, 1.0)
    }

    /// Same map, different declared Lipschitz constant. Useful when a step
    /// rule needs a positive constant for an operator that happens to be zero.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        assert!(lipschitz >= 0.0);
        self.lipschitz = lipschitz;
        self
    }

    pub fn with_strong_mono(mut self, mu: f64) -> Self {
        assert!(mu >= 0.0);
        self.strong_mono = mu;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn strong_mono(&self) -> f64 {
        self.strong_mono
    }

    /// Matrix and offset when the operator was built as an affine map.
    pub fn affine_parts(&self) -> Option<(&Matrix, &Vector)> {
        self.affine.as_ref().map(|(m, c)| (m, c))
    }

    /// Evaluate without boundary checks. Used on hot solver paths after the
    /// dimension has been validated once.
    #[inline]
    pub fn apply(&self, z: &Vector) -> Vector {
        (self.eval)(z)
    }

    /// Checked evaluation: rejects wrong dimensions and non-finite output.
    pub fn eval(&self, z: &Vector) -> Result<Vector> {
        linalg::ensure_dim(z, self.dim)?;
        let out = self.apply(z);
        if out.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: out.len(),
            });
        }
        if !linalg::is_finite(&out) {
            return Err(Error::NonFinite {
                operator: self.name.clone(),
            });
        }
        Ok(out)
    }

    /// Monotonicity and Lipschitz check on one pair. Returns
    /// `(⟨F(z1)−F(z2), z1−z2⟩ − μ‖z1−z2‖², ‖F(z1)−F(z2)‖ − L‖z1−z2‖)`.
    /// The first value should be `≥ −tol`, the second `≤ tol·‖z1−z2‖`.
    pub fn pair_margins(&self, z1: &Vector, z2: &Vector) -> (f64, f64) {
        let df = self.apply(z1) - self.apply(z2);
        let dz = z1 - z2;
        let nz = dz.norm();
        (
            df.dot(&dz) - self.strong_mono * nz * nz,
            df.norm() - self.lipschitz * nz,
        )
    }
}
