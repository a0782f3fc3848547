//! Dense linear-algebra helpers: power iteration for the largest eigenvalue
//! of a symmetric PSD matrix and spectral utilities built on it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Symmetric-input check threshold for [`max_eigenvalue`].
pub const SYMMETRY_TOL: f64 = 1e-12;

const POWER_MAX_ITERS: usize = 100_000;
const START_SEED: u64 = 0x005e_ed0f_1a3b;

/// Largest absolute asymmetry `max |M_ij - M_ji|`, relative to `max |M_ij|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration with a Rayleigh-quotient estimate.
///
/// The start vector is a fixed pseudo-random unit vector, so the result is
/// deterministic. Iteration stops once the eigen-residual
/// `‖Mv − ρv‖` falls below `tol·ρ`, which bounds the distance from `ρ` to
/// the spectrum by the same relative amount.
pub fn max_eigenvalue(m: &DMatrix<f64>, tol: f64) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "matrix" });
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let n = m.nrows();
    if n == 0 {
        return Err(Error::param("matrix", "empty"));
    }

    let mut rng = SeededRng::new(START_SEED);
    let mut v = DVector::from_fn(n, |_, _| 1.0 + 0.5 * rng.standard_normal());
    let norm = v.norm();
    if norm == 0.0 {
        v.fill(1.0);
    }
    v.normalize_mut();

    let mut rho = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = m * &v;
        rho = v.dot(&w);
        let residual = (&w - &v * rho).norm();
        if residual <= tol * rho.abs() || w.norm() == 0.0 {
            return Ok(rho.max(0.0));
        }
        v = w;
        v.normalize_mut();
    }
    Err(Error::NoConvergence {
        iterations: POWER_MAX_ITERS,
        estimate: rho,
    })
}

/// Gram matrix `AᵀA`.
pub fn gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.tr_mul(a)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Numerical rank threshold used for spectra of Gram matrices.
pub fn rank_threshold(largest: f64, dim: usize) -> f64 {
    largest * dim as f64 * f64::EPSILON * 1e3
}

/// Orthonormal basis of the row space of `A` together with the smallest
/// nonzero eigenvalue of `AᵀA` (that is, `σ²_min+`).
pub fn row_space(a: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let (values, vectors) = sorted_symmetric_eigen(&gram(a));
    let top = values[0].max(0.0);
    let thresh = rank_threshold(top, values.len());
    let rank = values.iter().take_while(|&&v| v > thresh).count();
    let basis = vectors.columns(0, rank).into_owned();
    let smallest = if rank == 0 { 0.0 } else { values[rank - 1] };
    (basis, smallest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let id = DMatrix::<f64>::identity(5, 5);
        assert!((max_eigenvalue(&id, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        assert!((max_eigenvalue(&d, 1e-12).unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_symmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            max_eigenvalue(&m, 1e-8),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn zero_matrix_has_zero_top_eigenvalue() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(max_eigenvalue(&z, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn row_space_of_duplicated_column() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 1.0, 0.0, 0.0, 3.0]);
        let (basis, smin) = row_space(&a);
        assert_eq!(basis.ncols(), 2);
        assert!(smin > 0.0);
        // null vector (1,-1,0)/√2 is orthogonal to the basis
        let null = DVector::from_vec(vec![1.0, -1.0, 0.0]) / 2f64.sqrt();
        assert!((basis.tr_mul(&null)).norm() < 1e-12);
    }
}
