//! Dense vector and matrix helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub fn vector(entries: &[f64]) -> Vector {
    Vector::from_column_slice(entries)
}

pub fn ensure_dim(v: &Vector, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Dimension { expected, got: v.len() });
    }
    Ok(())
}

pub fn is_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Euclidean distance between two vectors of equal length.
pub fn dist(a: &Vector, b: &Vector) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Spectral norm `‖M‖₂` by power iteration on `MᵀM`.
///
/// Stops after `max_iter` iterations or when two successive estimates agree
/// to `rel_tol`. The starting vector is deterministic so repeated calls
/// return bitwise-identical results.
pub fn spectral_norm(m: &Matrix, max_iter: usize, rel_tol: f64) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let gram = m.transpose() * m;
    // Slightly irregular start so we are unlikely to begin orthogonal to the
    // dominant eigenvector.
    let mut v = Vector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7 + 3) % 11) as f64);
    let nv = v.norm();
    v /= nv;
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = &gram * &v;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / wn;
        if (next - lambda).abs() <= rel_tol * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Rayleigh quotient is a lower bound; take a final norm ratio as well.
    let ratio = (&gram * &v).norm();
    lambda.max(ratio).max(0.0).sqrt()
}

/// Lipschitz constant used in step rules for an affine map `z ↦ Mz + c`:
/// 200 power iterations, relative tolerance 1e-10, inflated by 1%.
pub fn affine_lipschitz(m: &Matrix) -> f64 {
    spectral_norm(m, 200, 1e-10) * 1.01
}

/// Smallest eigenvalue of the symmetric part of `m`, clamped at zero.
/// This is the strong-monotonicity modulus of `z ↦ Mz + c`.
pub fn strong_monotonicity(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = Matrix::from_diagonal(&vector(&[3.0, -5.0, 1.0]));
        assert!((spectral_norm(&m, 200, 1e-14) - 5.0).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let m = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 2.0, 0.0, 1.0]);
        let svd = m.clone().svd(false, false);
        let sigma_max = svd.singular_values.max();
        assert!((spectral_norm(&m, 500, 1e-15) - sigma_max).abs() < 1e-8);
    }

    #[test]
    fn zero_matrix_has_zero_norm() {
        assert_eq!(spectral_norm(&Matrix::zeros(2, 2), 10, 1e-10), 0.0);
    }

    #[test]
    fn strong_monotonicity_of_skew_is_zero() {
        let m = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(strong_monotonicity(&m), 0.0);
        let m = Matrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 3.0]);
        assert!((strong_monotonicity(&m) - 2.0).abs() < 1e-12);
    }
}
