//! Small dense linear-algebra helpers shared by the filters.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NAN;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Cholesky factorization; on failure reports the minimum eigenvalue of the
/// offending matrix.
pub fn cholesky(m: &DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite { what, min_eigenvalue: f64::NAN });
    }
    Cholesky::new(m.clone()).ok_or_else(|| Error::NotPositiveDefinite {
        what,
        min_eigenvalue: min_eigenvalue(m),
    })
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite()) && Cholesky::new(m.clone()).is_some()
}

/// Raises every eigenvalue of a symmetric matrix to at least `floor`.
/// Returns the repaired matrix and whether any eigenvalue was changed.
pub fn floor_eigenvalues(m: &DMatrix<f64>, floor: f64) -> (DMatrix<f64>, bool) {
    let eig = SymmetricEigen::new(symmetrize(m));
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return (symmetrize(m), false);
    }
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    (symmetrize(&out), true)
}

/// Block-diagonal matrix `[a 0; 0 b]`.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let m = a.ncols() + b.ncols();
    let mut out = DMatrix::zeros(n, m);
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

pub fn max_abs_asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flooring_repairs_indefinite_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(min_eigenvalue(&m) < 0.0);
        let (fixed, changed) = floor_eigenvalues(&m, 1e-9);
        assert!(changed);
        assert!(min_eigenvalue(&fixed) >= 1e-9 * 0.999);
        assert!(is_positive_definite(&fixed));
    }

    #[test]
    fn cholesky_error_reports_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -3.0]);
        match cholesky(&m, "test") {
            Err(Error::NotPositiveDefinite { min_eigenvalue, .. }) => {
                assert!((min_eigenvalue + 3.0).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
