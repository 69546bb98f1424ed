//! Closed-form block updates. Each `update_*` returns the exact minimizer of
//! the augmented Lagrangian over one block with every other block, the
//! multipliers and `mu` held fixed.

use nalgebra::DMatrix;

use super::{AslrcState, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{spd_solve, spd_solve_right, SpdFactor};
use crate::prox::{column_l21_shrink, svt_with_norm, uniform_shrink, weighted_shrink};
use crate::weights::augmented_gram;

fn ones(n: usize) -> DMatrix<f64> {
    DMatrix::from_element(n, n, 1.0)
}

fn prepare(state: &AslrcState, x: &DMatrix<f64>) -> Result<()> {
    state.check_shapes(x.nrows(), x.ncols())
}

/// Factorization of the constant `2I + X^T X` used by every `Z` update.
pub struct ZSystem {
    factor: SpdFactor,
}

impl ZSystem {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        let n = x.ncols();
        let mut m = x.transpose() * x;
        for i in 0..n {
            m[(i, i)] += 2.0;
        }
        Ok(ZSystem {
            factor: SpdFactor::new(m)?,
        })
    }
}

/// Projection update:
/// `L = [Y1 X^T - Y3 + mu (X - XZ - E) X^T + mu F]
///      [2 beta (X - XR)(X - XR)^T + mu (X X^T + I)]^-1`.
pub fn update_l(state: &AslrcState, x: &DMatrix<f64>, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
    prepare(state, x)?;
    let mu = state.mu;
    let d = x.nrows();
    let xt = x.transpose();

    let xr = x - x * &state.r;
    let mut sys = (&xr * xr.transpose()) * (2.0 * cfg.beta) + (x * &xt) * mu;
    for i in 0..d {
        sys[(i, i)] += mu;
    }
    let resid = x - x * &state.z - &state.e;
    let rhs = &state.y1 * &xt - &state.y3 + (resid * &xt) * mu + &state.f * mu;
    spd_solve_right(sys, &rhs)
}

/// Coding update `Z = (2I + X^T X)^-1 Xi` with
/// `Xi = (X^T Y1 - Y2 - Y4) / mu + X^T (X - LX - E) + J + Q`.
pub fn update_z_with(state: &AslrcState, x: &DMatrix<f64>, zsys: &ZSystem) -> Result<DMatrix<f64>> {
    prepare(state, x)?;
    let mu = state.mu;
    let xt = x.transpose();
    let xi = (&xt * &state.y1 - &state.y2 - &state.y4) / mu
        + &xt * (x - &state.l * x - &state.e)
        + &state.j
        + &state.q;
    Ok(zsys.factor.solve(&xi))
}

/// [`update_z_with`] with a fresh factorization.
pub fn update_z(state: &AslrcState, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    update_z_with(state, x, &ZSystem::new(x)?)
}

/// Sparse error: `E = shrink(X - XZ - LX + Y1 / mu, lambda / mu)`.
pub fn update_e(state: &AslrcState, x: &DMatrix<f64>, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
    prepare(state, x)?;
    let target = x - x * &state.z - &state.l * x + &state.y1 / state.mu;
    uniform_shrink(&target, cfg.lambda / state.mu)
}

/// Adaptive weights: solves
/// `(2 beta A^T A + 2 mu I) R = 2 beta A^T A - Y5 + Y6 + mu S + mu (ee^T - W)`
/// where `A^T A = (LX)^T LX + ee^T`.
pub fn update_r(state: &AslrcState, x: &DMatrix<f64>, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
    prepare(state, x)?;
    let n = x.ncols();
    let mu = state.mu;
    let gram = augmented_gram(&(&state.l * x)) * (2.0 * cfg.beta);
    let mut sys = gram.clone();
    for i in 0..n {
        sys[(i, i)] += 2.0 * mu;
    }
    let rhs = gram - &state.y5 + &state.y6 + &state.s * mu + (ones(n) - &state.w) * mu;
    spd_solve(sys, &rhs)
}

/// Low-rank auxiliary: `J = svt(Z + Y2 / mu, 1 / mu)`.
pub fn update_j(state: &AslrcState) -> Result<DMatrix<f64>> {
    update_j_with_norm(state).map(|(j, _)| j)
}

fn update_j_with_norm(state: &AslrcState) -> Result<(DMatrix<f64>, f64)> {
    let target = &state.z + &state.y2 / state.mu;
    svt_with_norm(&target, 1.0 / state.mu)
}

/// Group-sparse projection auxiliary: `F = l21_shrink(L + Y3 / mu, 1 / mu)`.
pub fn update_f(state: &AslrcState) -> Result<DMatrix<f64>> {
    column_l21_shrink(&(&state.l + &state.y3 / state.mu), 1.0 / state.mu)
}

/// Structured coding auxiliary:
/// `Q = shrink(Z + Y4 / mu, (alpha / mu) |W|)` entrywise.
pub fn update_q(state: &AslrcState, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
    let scale = cfg.alpha / state.mu;
    let target = &state.z + &state.y4 / state.mu;
    weighted_shrink(&target, &state.w.map(|w| scale * w.abs()))
}

/// Structure weight: `W = shrink(ee^T - R + Y6 / mu, (alpha / mu) |Q|)`.
pub fn update_w(state: &AslrcState, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
    let n = state.r.nrows();
    let scale = cfg.alpha / state.mu;
    let target = ones(n) - &state.r + &state.y6 / state.mu;
    weighted_shrink(&target, &state.q.map(|q| scale * q.abs()))
}

/// Group-sparse weight auxiliary: `S = l21_shrink(R + Y5 / mu, beta / mu)`.
pub fn update_s(state: &AslrcState, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
    column_l21_shrink(&(&state.r + &state.y5 / state.mu), cfg.beta / state.mu)
}

/// One primal sweep `L, Z, E, R, J, F, Q, W, S`, in place. Returns the
/// nuclear norm of the new `J`.
pub fn primal_sweep(
    state: &mut AslrcState,
    x: &DMatrix<f64>,
    cfg: &SolverConfig,
    zsys: &ZSystem,
) -> Result<f64> {
    state.l = update_l(state, x, cfg)?;
    state.z = update_z_with(state, x, zsys)?;
    state.e = update_e(state, x, cfg)?;
    state.r = update_r(state, x, cfg)?;
    let (j, nuclear) = update_j_with_norm(state)?;
    state.j = j;
    state.f = update_f(state)?;
    state.q = update_q(state, cfg)?;
    state.w = update_w(state, cfg)?;
    state.s = update_s(state, cfg)?;
    if !nuclear.is_finite() {
        return Err(Error::numerical("non-finite nuclear norm"));
    }
    Ok(nuclear)
}

/// Dual ascent on all six multipliers with step `mu`, then
/// `mu <- min(eta mu, mu_max)` and `iter += 1`.
pub fn update_multipliers_and_mu(state: &mut AslrcState, x: &DMatrix<f64>, cfg: &SolverConfig) {
    let mu = state.mu;
    let n = x.ncols();
    let r1 = x - x * &state.z - &state.l * x - &state.e;
    state.y1 += r1 * mu;
    state.y2 += (&state.z - &state.j) * mu;
    state.y3 += (&state.l - &state.f) * mu;
    state.y4 += (&state.z - &state.q) * mu;
    state.y5 += (&state.r - &state.s) * mu;
    state.y6 += (ones(n) - &state.w - &state.r) * mu;
    state.mu = (cfg.eta * mu).min(cfg.mu_max);
    state.iter += 1;
}
