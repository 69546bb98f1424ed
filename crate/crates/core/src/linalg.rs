use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Relative diagonal jitter applied when a Cholesky factorization fails on
/// round-off.
const JITTER_RTOL: f64 = 1e-12;

/// Cholesky factor of a symmetric positive definite matrix.
pub(crate) struct SpdFactor(Cholesky<f64, Dyn>);

impl SpdFactor {
    pub(crate) fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::numerical("non-finite system matrix"));
        }
        if let Some(c) = Cholesky::new(m.clone()) {
            return Ok(SpdFactor(c));
        }
        let jitter = JITTER_RTOL * m.trace().abs().max(f64::MIN_POSITIVE);
        let mut shifted = m;
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += jitter;
        }
        Cholesky::new(shifted)
            .map(SpdFactor)
            .ok_or_else(|| Error::numerical("system matrix is not positive definite"))
    }

    pub(crate) fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.solve(b)
    }
}

/// Solve `M X = B` for symmetric positive definite `M`.
pub(crate) fn spd_solve(m: DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(SpdFactor::new(m)?.solve(b))
}

/// Solve `X M = B` for symmetric positive definite `M`.
pub(crate) fn spd_solve_right(m: DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spd_solve(m, &b.transpose())?.transpose())
}

pub(crate) fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn left_and_right_solves() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let x = spd_solve(m.clone(), &b).unwrap();
        assert_relative_eq!(&m * &x, b, epsilon = 1e-12);
        let y = spd_solve_right(m.clone(), &b).unwrap();
        assert_relative_eq!(&y * &m, b, epsilon = 1e-12);
    }

    #[test]
    fn semidefinite_gets_jitter() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(SpdFactor::new(m).is_ok());
        let neg = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!(SpdFactor::new(neg).is_err());
    }
}
