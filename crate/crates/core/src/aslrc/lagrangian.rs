use nalgebra::DMatrix;

use super::{AslrcState, SolverConfig};
use crate::error::{Error, Result};
use crate::prox::{l1_norm, l21_norm, max_abs, nuclear_norm};
use crate::weights::augmented_gram;

/// The six constraint residuals.
#[derive(Debug, Clone)]
pub struct Residuals {
    /// `X - XZ - LX - E`
    pub data: DMatrix<f64>,
    /// `Z - J`
    pub z_j: DMatrix<f64>,
    /// `L - F`
    pub l_f: DMatrix<f64>,
    /// `Z - Q`
    pub z_q: DMatrix<f64>,
    /// `R - S`
    pub r_s: DMatrix<f64>,
    /// `ee^T - W - R`
    pub weight: DMatrix<f64>,
}

impl Residuals {
    /// Largest absolute entry over all six residuals.
    pub fn max_abs(&self) -> f64 {
        [
            &self.data,
            &self.z_j,
            &self.l_f,
            &self.z_q,
            &self.r_s,
            &self.weight,
        ]
        .into_iter()
        .map(max_abs)
        .fold(0.0, f64::max)
    }
}

pub fn residuals(state: &AslrcState, x: &DMatrix<f64>) -> Residuals {
    let n = x.ncols();
    Residuals {
        data: x - x * &state.z - &state.l * x - &state.e,
        z_j: &state.z - &state.j,
        l_f: &state.l - &state.f,
        z_q: &state.z - &state.q,
        r_s: &state.r - &state.s,
        weight: DMatrix::from_element(n, n, 1.0) - &state.w - &state.r,
    }
}

/// `(converged, residual)` where `residual` is the largest infinity norm of
/// the six constraint residuals and `converged` means `residual < tol`.
pub fn check_convergence(state: &AslrcState, x: &DMatrix<f64>, cfg: &SolverConfig) -> (bool, f64) {
    let res = residuals(state, x).max_abs();
    (res < cfg.tol, res)
}

/// The augmented Lagrangian at the current state.
pub fn augmented_lagrangian(
    state: &AslrcState,
    x: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<f64> {
    state.check_shapes(x.nrows(), x.ncols())?;
    evaluate(state, x, cfg, None)
}

pub(super) fn evaluate(
    state: &AslrcState,
    x: &DMatrix<f64>,
    cfg: &SolverConfig,
    nuclear_j: Option<f64>,
) -> Result<f64> {
    let nuclear = match nuclear_j {
        Some(v) => v,
        None => nuclear_norm(&state.j)?,
    };
    let structure = state
        .w
        .iter()
        .zip(state.q.iter())
        .map(|(w, q)| (w * q).abs())
        .sum::<f64>();

    // ||A - AR||_F^2 = tr((I - R)^T A^T A (I - R))
    let n = x.ncols();
    let mut i_minus_r = -&state.r;
    for i in 0..n {
        i_minus_r[(i, i)] += 1.0;
    }
    let gram = augmented_gram(&(&state.l * x));
    let fit = (&gram * &i_minus_r).dot(&i_minus_r);

    let objective = nuclear
        + l21_norm(&state.f)
        + cfg.alpha * structure
        + cfg.beta * (fit + l21_norm(&state.s))
        + cfg.lambda * l1_norm(&state.e);

    let res = residuals(state, x);
    let pairs = [
        (&state.y1, &res.data),
        (&state.y2, &res.z_j),
        (&state.y3, &res.l_f),
        (&state.y4, &res.z_q),
        (&state.y5, &res.r_s),
        (&state.y6, &res.weight),
    ];
    let linear: f64 = pairs.iter().map(|(y, r)| y.dot(r)).sum();
    let quadratic: f64 = pairs.iter().map(|(_, r)| r.norm_squared()).sum();

    let value = objective + linear + 0.5 * state.mu * quadratic;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::numerical("non-finite augmented Lagrangian"))
    }
}
