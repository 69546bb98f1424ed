//! Latent low-rank representation baseline:
//!
//! ```text
//! min ||Z||_* + ||L||_* + lambda ||E||_1   s.t.  X = XZ + LX + E
//! ```
//!
//! solved by inexact ALM with `J = Z`, `F = L`, using the same zero
//! initialization, penalty schedule and stopping rule as the AS-LRC solver
//! so that comparisons isolate the model.

use nalgebra::DMatrix;

use crate::aslrc::{at_iteration, Decomposition, SolverConfig, TraceRow};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, SpdFactor};
use crate::matrix_io::DataMatrix;
use crate::prox::{l1_norm, max_abs, nuclear_norm, svt_with_norm, uniform_shrink};

#[derive(Debug, Clone, PartialEq)]
pub struct LatLrrState {
    pub z: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub y1: DMatrix<f64>,
    pub y2: DMatrix<f64>,
    pub y3: DMatrix<f64>,
    pub mu: f64,
    pub iter: usize,
}

impl LatLrrState {
    pub fn zeros(d: usize, n: usize, mu: f64) -> Self {
        LatLrrState {
            z: DMatrix::zeros(n, n),
            l: DMatrix::zeros(d, d),
            e: DMatrix::zeros(d, n),
            j: DMatrix::zeros(n, n),
            f: DMatrix::zeros(d, d),
            y1: DMatrix::zeros(d, n),
            y2: DMatrix::zeros(n, n),
            y3: DMatrix::zeros(d, d),
            mu,
            iter: 0,
        }
    }

    fn is_finite(&self) -> bool {
        [
            &self.z, &self.l, &self.e, &self.j, &self.f, &self.y1, &self.y2, &self.y3,
        ]
        .into_iter()
        .all(all_finite)
    }
}

/// Constant factorizations `(X^T X + I)` and `(X X^T + I)`.
pub struct LatLrrSystem {
    z_factor: SpdFactor,
    l_factor: SpdFactor,
}

impl LatLrrSystem {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        let mut xtx = x.transpose() * x;
        let mut xxt = x * x.transpose();
        for i in 0..xtx.nrows() {
            xtx[(i, i)] += 1.0;
        }
        for i in 0..xxt.nrows() {
            xxt[(i, i)] += 1.0;
        }
        Ok(LatLrrSystem {
            z_factor: SpdFactor::new(xtx)?,
            l_factor: SpdFactor::new(xxt)?,
        })
    }
}

fn data_residual(s: &LatLrrState, x: &DMatrix<f64>) -> DMatrix<f64> {
    x - x * &s.z - &s.l * x - &s.e
}

/// Sweep `L, Z, E, J, F` in place; returns `||J||_* + ||F||_*`.
pub fn latlrr_sweep(
    s: &mut LatLrrState,
    x: &DMatrix<f64>,
    lambda: f64,
    sys: &LatLrrSystem,
) -> Result<f64> {
    let mu = s.mu;
    let xt = x.transpose();

    // L (X X^T + I) = (X - XZ - E) X^T + F + (Y1 X^T - Y3) / mu
    let rhs_l = (x - x * &s.z - &s.e) * &xt + &s.f + (&s.y1 * &xt - &s.y3) / mu;
    s.l = sys.l_factor.solve(&rhs_l.transpose()).transpose();

    // (X^T X + I) Z = X^T (X - LX - E) + J + (X^T Y1 - Y2) / mu
    let rhs_z = &xt * (x - &s.l * x - &s.e) + &s.j + (&xt * &s.y1 - &s.y2) / mu;
    s.z = sys.z_factor.solve(&rhs_z);

    s.e = uniform_shrink(&(x - x * &s.z - &s.l * x + &s.y1 / mu), lambda / mu)?;
    let (j, nj) = svt_with_norm(&(&s.z + &s.y2 / mu), 1.0 / mu)?;
    let (f, nf) = svt_with_norm(&(&s.l + &s.y3 / mu), 1.0 / mu)?;
    s.j = j;
    s.f = f;
    Ok(nj + nf)
}

pub fn latlrr_residual(s: &LatLrrState, x: &DMatrix<f64>) -> f64 {
    max_abs(&data_residual(s, x))
        .max(max_abs(&(&s.z - &s.j)))
        .max(max_abs(&(&s.l - &s.f)))
}

pub fn latlrr_lagrangian(s: &LatLrrState, x: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    let nuclear = nuclear_norm(&s.j)? + nuclear_norm(&s.f)?;
    Ok(lagrangian_with(s, x, lambda, nuclear))
}

fn lagrangian_with(s: &LatLrrState, x: &DMatrix<f64>, lambda: f64, nuclear: f64) -> f64 {
    let r1 = data_residual(s, x);
    let r2 = &s.z - &s.j;
    let r3 = &s.l - &s.f;
    nuclear
        + lambda * l1_norm(&s.e)
        + s.y1.dot(&r1)
        + s.y2.dot(&r2)
        + s.y3.dot(&r3)
        + 0.5 * s.mu * (r1.norm_squared() + r2.norm_squared() + r3.norm_squared())
}

fn dual_step(s: &mut LatLrrState, x: &DMatrix<f64>, cfg: &SolverConfig) {
    let mu = s.mu;
    s.y1 += data_residual(s, x) * mu;
    s.y2 += (&s.z - &s.j) * mu;
    s.y3 += (&s.l - &s.f) * mu;
    s.mu = (cfg.eta * mu).min(cfg.mu_max);
    s.iter += 1;
}

/// Solve the baseline with error weight `lambda` (overriding `cfg.lambda`).
pub fn latlrr_solve(x: &DataMatrix, lambda: f64, cfg: &SolverConfig) -> Result<Decomposition> {
    let cfg = SolverConfig { lambda, ..*cfg };
    cfg.validate()?;
    let x = x.as_matrix();
    let sys = LatLrrSystem::new(x)?;
    let mut s = LatLrrState::zeros(x.nrows(), x.ncols(), cfg.mu0);
    let mut trace = Vec::new();
    let mut converged = false;

    for it in 1..=cfg.max_iter {
        let nuclear = latlrr_sweep(&mut s, x, lambda, &sys).map_err(|e| at_iteration(e, it))?;
        let lagrangian = lagrangian_with(&s, x, lambda, nuclear);
        let residual = latlrr_residual(&s, x);
        trace.push(TraceRow {
            iteration: it,
            residual,
            mu: s.mu,
            lagrangian,
        });
        dual_step(&mut s, x, &cfg);
        if !s.is_finite() || !residual.is_finite() {
            return Err(Error::Numerical {
                iteration: Some(it),
                msg: "non-finite solver state".into(),
            });
        }
        if residual < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(Decomposition::new(x, s.z, s.l, s.e, trace, converged))
}
