//! Closed-form proximal operators and the thin SVD they are built on.
//!
//! | operator              | penalty             | prox of                                 |
//! |-----------------------|---------------------|-----------------------------------------|
//! | [`scalar_shrink`]     | `eps * |x|`         | soft thresholding                       |
//! | [`weighted_shrink`]   | `sum T_ij |M_ij|`   | entrywise soft thresholding             |
//! | [`svt`]               | `tau * ||M||_*`     | singular value thresholding             |
//! | [`column_l21_shrink`] | `tau * ||M||_{2,1}` | column-wise group (block) soft threshold |
//!
//! Exact-threshold ties (`|x| == eps`) map to zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative cutoff below which a singular value counts as zero for rank.
pub const RANK_RTOL: f64 = 1e-12;

/// Largest accepted `||U S V^T - M|| / (1 + ||M||)`.
const SVD_RECON_RTOL: f64 = 1e-9;

/// `U diag(s) V^T` with `k = min(rows, cols)` columns in `U` and `V`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    /// Numerical rank: singular values above `RANK_RTOL * sigma_1`.
    pub fn rank(&self) -> usize {
        let top = self.singular_values.get(0).copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > RANK_RTOL * top)
            .count()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        with_singular_values(&self.u, &self.singular_values, &self.v)
    }
}

fn with_singular_values(u: &DMatrix<f64>, s: &DVector<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut us = u.clone();
    for (mut col, &sv) in us.column_iter_mut().zip(s.iter()) {
        col *= sv;
    }
    us * v.transpose()
}

fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numerical(format!("non-finite input to {what}")))
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(t))
    }
}

/// Thin SVD with singular values in decreasing order. Fails with a
/// numerical error if the factors do not reproduce `m`.
pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    ensure_finite(m, "thin_svd")?;
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok(ThinSvd {
            u: DMatrix::zeros(r, 0),
            singular_values: DVector::zeros(0),
            v: DMatrix::zeros(c, 0),
        });
    }
    let svd = faer::Mat::from_fn(r, c, |i, j| m[(i, j)])
        .thin_svd()
        .map_err(|_| Error::numerical("SVD did not converge"))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let out = ThinSvd {
        u: DMatrix::from_fn(r, k, |i, j| u[(i, j)]),
        singular_values: DVector::from_fn(k, |i, _| s[i]),
        v: DMatrix::from_fn(c, k, |i, j| v[(i, j)]),
    };
    if (out.reconstruct() - m).norm() > SVD_RECON_RTOL * (1.0 + m.norm()) {
        return Err(Error::numerical("SVD failed to reconstruct its input"));
    }
    Ok(out)
}

/// `sgn(x) * max(|x| - eps, 0)`.
pub fn scalar_shrink(x: f64, eps: f64) -> Result<f64> {
    check_threshold(eps)?;
    Ok(shrink(x, eps))
}

#[inline]
pub(crate) fn shrink(x: f64, eps: f64) -> f64 {
    let mag = x.abs() - eps;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

/// Entrywise soft thresholding of `m` by the matching entry of `thresholds`.
pub fn weighted_shrink(m: &DMatrix<f64>, thresholds: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.shape() != thresholds.shape() {
        return Err(Error::dim(format!(
            "weighted_shrink: matrix {:?} vs thresholds {:?}",
            m.shape(),
            thresholds.shape()
        )));
    }
    if let Some(&t) = thresholds.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidThreshold(t));
    }
    ensure_finite(m, "weighted_shrink")?;
    Ok(m.zip_map(thresholds, shrink))
}

/// Soft thresholding with one threshold for every entry.
pub fn uniform_shrink(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    check_threshold(tau)?;
    ensure_finite(m, "uniform_shrink")?;
    Ok(m.map(|v| shrink(v, tau)))
}

/// Singular value thresholding, the prox of `tau * ||.||_*`.
pub fn svt(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    svt_with_norm(m, tau).map(|(out, _)| out)
}

/// [`svt`] that also reports the nuclear norm of its output, which the
/// solvers need for the Lagrangian trace without a second SVD.
pub fn svt_with_norm(m: &DMatrix<f64>, tau: f64) -> Result<(DMatrix<f64>, f64)> {
    check_threshold(tau)?;
    let svd = thin_svd(m)?;
    let shrunk = svd.singular_values.map(|s| shrink(s, tau));
    let nuclear = shrunk.sum();
    Ok((with_singular_values(&svd.u, &shrunk, &svd.v), nuclear))
}

/// Column-wise group soft thresholding, the prox of `tau * ||.||_{2,1}`
/// where the 2,1 norm sums the Euclidean norms of the columns.
pub fn column_l21_shrink(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    check_threshold(tau)?;
    ensure_finite(m, "column_l21_shrink")?;
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > tau {
            col *= (norm - tau) / norm;
        } else {
            col.fill(0.0);
        }
    }
    Ok(out)
}

pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(thin_svd(m)?.singular_values.sum())
}

/// Sum of column Euclidean norms.
pub fn l21_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.norm()).sum()
}

pub fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

/// Largest absolute entry (0 for an empty matrix).
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn svd_of_exactly_rank_one_tall_matrix() {
        let p = DMatrix::from_column_slice(
            5,
            2,
            &[
                1.0971064987763601,
                -1.4266636043610113,
                -0.26306054615485214,
                0.7911184988009531,
                0.6414951182928521,
                -1.5264651419372117,
                1.9849962275827417,
                0.36601073311680504,
                -1.1007270605982593,
                -0.8925477498210828,
            ],
        );
        let svd = thin_svd(&p).unwrap();
        assert!((svd.reconstruct() - &p).norm() < 1e-12);
        assert_relative_eq!(svd.singular_values[0], 3.571849420680465, epsilon = 1e-12);
        assert!(svd.singular_values[1] < 1e-12);
    }

    #[test]
    fn scalar_cases() {
        assert_relative_eq!(scalar_shrink(1.2, 0.5).unwrap(), 0.7, epsilon = 1e-15);
        assert_eq!(scalar_shrink(-0.3, 0.5).unwrap(), 0.0);
        assert_eq!(scalar_shrink(-1.5, 0.5).unwrap(), -1.0);
        assert_eq!(scalar_shrink(0.5, 0.5).unwrap(), 0.0);
        assert!(matches!(
            scalar_shrink(1.0, -0.1),
            Err(Error::InvalidThreshold(_))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x: f64 = rng.random_range(-10.0..10.0);
            assert_eq!(scalar_shrink(x, 0.0).unwrap(), x);
        }
    }

    #[test]
    fn weighted_cases() {
        let m = DMatrix::from_element(1, 1, 1.2);
        let t = DMatrix::from_element(1, 1, 0.5);
        assert_relative_eq!(
            weighted_shrink(&m, &t).unwrap()[(0, 0)],
            0.7,
            epsilon = 1e-15
        );
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random(4, 5, &mut rng);
        assert_eq!(weighted_shrink(&m, &DMatrix::zeros(4, 5)).unwrap(), m);
        assert!(matches!(
            weighted_shrink(&m, &DMatrix::zeros(5, 4)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            weighted_shrink(&m, &DMatrix::from_element(4, 5, -1.0)),
            Err(Error::InvalidThreshold(_))
        ));
    }

    #[test]
    fn svt_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.4]);
        let out = svt(&m, 1.0).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(out, expect, epsilon = 1e-12);
        assert_relative_eq!(svt(&m, 0.0).unwrap(), m, epsilon = 1e-12);
    }

    #[test]
    fn svt_never_raises_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random(6, 4, &mut rng);
        let before = thin_svd(&m).unwrap();
        let after = thin_svd(&svt(&m, 0.3).unwrap()).unwrap();
        for (a, b) in after
            .singular_values
            .iter()
            .zip(before.singular_values.iter())
        {
            assert!(*a <= *b + 1e-12);
        }
        assert!(after.rank() <= before.rank());
    }

    #[test]
    fn svt_rejects_nonfinite() {
        let m = DMatrix::from_element(2, 2, f64::NAN);
        assert!(matches!(svt(&m, 1.0), Err(Error::Numerical { .. })));
    }

    #[test]
    fn l21_cases() {
        let m = DMatrix::from_column_slice(2, 2, &[3.0, 4.0, 0.3, 0.4]);
        let out = column_l21_shrink(&m, 1.0).unwrap();
        assert_relative_eq!(out[(0, 0)], 2.4, epsilon = 1e-15);
        assert_relative_eq!(out[(1, 0)], 3.2, epsilon = 1e-15);
        assert_eq!(out.column(1).norm(), 0.0);
    }

    #[test]
    fn thin_svd_cases() {
        let id = DMatrix::<f64>::identity(3, 3);
        let s = thin_svd(&id).unwrap();
        assert_relative_eq!(
            s.singular_values,
            DVector::from_element(3, 1.0),
            epsilon = 1e-14
        );

        // |u| = 2, |v| = 3
        let u = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        let v = DVector::from_vec(vec![0.0, 3.0 * 0.6, 3.0 * 0.8, 0.0]);
        let s = thin_svd(&(u * v.transpose())).unwrap();
        assert_eq!(s.rank(), 1);
        assert_relative_eq!(s.singular_values[0], 6.0, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random(10, 7, &mut rng);
        let s = thin_svd(&m).unwrap();
        assert_eq!(s.u.shape(), (10, 7));
        assert_eq!(s.v.shape(), (7, 7));
        assert!((s.reconstruct() - &m).norm() / m.norm() < 1e-10);
        for w in s.singular_values.as_slice().windows(2) {
            assert!(w[0] >= w[1] && w[1] >= 0.0);
        }
    }

    #[test]
    fn wide_matrix_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random(3, 8, &mut rng);
        let s = thin_svd(&m).unwrap();
        assert_eq!(s.u.shape(), (3, 3));
        assert_eq!(s.v.shape(), (8, 3));
        assert!((s.reconstruct() - &m).norm() / m.norm() < 1e-10);
    }
}
