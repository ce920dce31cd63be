//! Small dense helpers on top of nalgebra shared by the samplers.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{MnpError, Result};

/// Relative pivot floor for accepting a Cholesky factorization.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Cholesky factorization that rejects matrices whose pivots fall below
/// `PIVOT_TOLERANCE` times the largest diagonal entry.
pub fn cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(MnpError::NotPositiveDefinite {
            reason: format!("shape {}x{}", m.nrows(), m.ncols()),
            matrix: m.clone(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(MnpError::NotPositiveDefinite {
            reason: "non-finite entry".into(),
            matrix: m.clone(),
        });
    }
    let max_diag = m.diagonal().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max_diag <= 0.0 {
        return Err(MnpError::NotPositiveDefinite {
            reason: "non-positive diagonal".into(),
            matrix: m.clone(),
        });
    }
    let chol = Cholesky::new(m.clone()).ok_or_else(|| MnpError::NotPositiveDefinite {
        reason: "factorization failed".into(),
        matrix: m.clone(),
    })?;
    let floor = PIVOT_TOLERANCE * max_diag;
    let l = chol.l_dirty();
    for i in 0..m.nrows() {
        let pivot = l[(i, i)] * l[(i, i)];
        if !(pivot > floor) {
            return Err(MnpError::NotPositiveDefinite {
                reason: format!("pivot {pivot:e} below tolerance {floor:e}"),
                matrix: m.clone(),
            });
        }
    }
    Ok(chol)
}

/// Inverse of an SPD matrix, symmetrized.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = cholesky(m)?.inverse();
    Ok(symmetrize(inv))
}

pub fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * (1.0 + m[(i, j)].abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky(&m), Err(MnpError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn rejects_nearly_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-15]);
        assert!(cholesky(&m).is_err());
    }

    #[test]
    fn inverse_of_spd() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let inv = spd_inverse(&m).unwrap();
        let id = &m * &inv;
        assert!((id - DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }
}
