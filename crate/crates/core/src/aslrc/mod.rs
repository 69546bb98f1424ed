//! Adaptive structure-constrained latent low-rank coding (AS-LRC), solved
//! by inexact ALM.
//!
//! The model decomposes `X = XZ + LX + E` and minimizes
//!
//! ```text
//! ||Z||_* + ||L||_{2,1} + alpha ||(ee^T - R) . Z||_1
//!         + beta (||A - AR||_F^2 + ||R||_{2,1}) + lambda ||E||_1,   A = [LX; e^T]
//! ```
//!
//! after splitting with the auxiliaries `J = Z`, `F = L`, `Q = Z`, `S = R`
//! and `W = ee^T - R`. One iteration is a Gauss-Seidel sweep of exact block
//! minimizations of the augmented Lagrangian in the order
//! `L, Z, E, R, J, F, Q, W, S`, followed by a dual ascent step on the six
//! multipliers and `mu <- min(eta mu, mu_max)`.

mod lagrangian;
mod updates;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::all_finite;
use crate::matrix_io::DataMatrix;

pub use lagrangian::{augmented_lagrangian, check_convergence, residuals, Residuals};
pub use updates::{
    primal_sweep, update_e, update_f, update_j, update_l, update_multipliers_and_mu, update_q,
    update_r, update_s, update_w, update_z, update_z_with, ZSystem,
};

/// Candidate values for `alpha` and `beta`: `1e-8, 1e-6, ..., 1e8`.
pub const PARAMETER_GRID: [f64; 9] = [1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6, 1e8];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Weight of the structure term `||W . Q||_1`.
    pub alpha: f64,
    /// Weight of the adaptive reconstruction term and `||S||_{2,1}`.
    pub beta: f64,
    /// Weight of the sparse error `||E||_1`.
    pub lambda: f64,
    pub mu0: f64,
    pub eta: f64,
    pub mu_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: 0.01,
            beta: 0.01,
            lambda: 0.015,
            mu0: 1e-6,
            eta: 1.12,
            mu_max: 1e10,
            tol: 1e-6,
            max_iter: 300,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_weights(alpha: f64, beta: f64, lambda: f64) -> Self {
        SolverConfig {
            alpha,
            beta,
            lambda,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lambda", self.lambda),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.eta.is_finite() && self.eta > 1.0) {
            return bad(format!("eta must be > 1, got {}", self.eta));
        }
        if !(self.mu0 > 0.0 && self.mu0 < self.mu_max && self.mu_max.is_finite()) {
            return bad(format!(
                "need 0 < mu0 < mu_max, got mu0={} mu_max={}",
                self.mu0, self.mu_max
            ));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol must be > 0, got {}", self.tol));
        }
        Ok(())
    }
}

/// Every iterate of the AS-LRC solver.
#[derive(Debug, Clone, PartialEq)]
pub struct AslrcState {
    /// `N x N` blocks.
    pub z: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub w: DMatrix<f64>,
    /// `d x d` blocks.
    pub l: DMatrix<f64>,
    pub f: DMatrix<f64>,
    /// `d x N`.
    pub e: DMatrix<f64>,
    /// Multiplier of `X - XZ - LX - E` (`d x N`).
    pub y1: DMatrix<f64>,
    /// Multiplier of `Z - J`.
    pub y2: DMatrix<f64>,
    /// Multiplier of `L - F` (`d x d`).
    pub y3: DMatrix<f64>,
    /// Multiplier of `Z - Q`.
    pub y4: DMatrix<f64>,
    /// Multiplier of `R - S`.
    pub y5: DMatrix<f64>,
    /// Multiplier of `ee^T - W - R`.
    pub y6: DMatrix<f64>,
    pub mu: f64,
    pub iter: usize,
}

impl AslrcState {
    pub fn zeros(d: usize, n: usize, mu: f64) -> Self {
        let nn = || DMatrix::zeros(n, n);
        let dd = || DMatrix::zeros(d, d);
        AslrcState {
            z: nn(),
            j: nn(),
            q: nn(),
            r: nn(),
            s: nn(),
            w: nn(),
            l: dd(),
            f: dd(),
            e: DMatrix::zeros(d, n),
            y1: DMatrix::zeros(d, n),
            y2: nn(),
            y3: dd(),
            y4: nn(),
            y5: nn(),
            y6: nn(),
            mu,
            iter: 0,
        }
    }

    fn blocks(&self) -> [(&'static str, &DMatrix<f64>); 15] {
        [
            ("Z", &self.z),
            ("J", &self.j),
            ("Q", &self.q),
            ("R", &self.r),
            ("S", &self.s),
            ("W", &self.w),
            ("L", &self.l),
            ("F", &self.f),
            ("E", &self.e),
            ("Y1", &self.y1),
            ("Y2", &self.y2),
            ("Y3", &self.y3),
            ("Y4", &self.y4),
            ("Y5", &self.y5),
            ("Y6", &self.y6),
        ]
    }

    /// Reject any block whose shape does not match data of size `d x n`.
    pub fn check_shapes(&self, d: usize, n: usize) -> Result<()> {
        for (name, m) in self.blocks() {
            let want = match name {
                "L" | "F" | "Y3" => (d, d),
                "E" | "Y1" => (d, n),
                _ => (n, n),
            };
            if m.shape() != want {
                return Err(Error::dim(format!(
                    "state block {name} is {:?}, expected {want:?}",
                    m.shape()
                )));
            }
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::numerical(format!("penalty mu = {}", self.mu)));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.mu.is_finite() && self.blocks().iter().all(|(_, m)| all_finite(m))
    }
}

/// All-zero state with `mu = mu0`.
pub fn init_state(x: &DMatrix<f64>, cfg: &SolverConfig) -> AslrcState {
    AslrcState::zeros(x.nrows(), x.ncols(), cfg.mu0)
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    /// 1-based sweep index.
    pub iteration: usize,
    /// Largest constraint violation after the sweep.
    pub residual: f64,
    /// Penalty used during the sweep.
    pub mu: f64,
    /// Augmented Lagrangian after the sweep, before the dual step.
    pub lagrangian: f64,
}

/// Output of a latent low-rank solver.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub z: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub e: DMatrix<f64>,
    /// `X Z*`.
    pub principal: DMatrix<f64>,
    /// `L* X`.
    pub salient: DMatrix<f64>,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

impl Decomposition {
    pub(crate) fn new(
        x: &DMatrix<f64>,
        z: DMatrix<f64>,
        l: DMatrix<f64>,
        e: DMatrix<f64>,
        trace: Vec<TraceRow>,
        converged: bool,
    ) -> Self {
        let principal = x * &z;
        let salient = &l * x;
        let iterations = trace.len();
        let residual = trace.last().map_or(f64::INFINITY, |t| t.residual);
        Decomposition {
            z,
            l,
            e,
            principal,
            salient,
            trace,
            converged,
            iterations,
            residual,
        }
    }

    /// `X - XZ* - L*X - E*`.
    pub fn reconstruction_gap(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x - &self.principal - &self.salient - &self.e
    }
}

/// Run inexact ALM until the largest constraint violation drops below
/// `cfg.tol` or `cfg.max_iter` sweeps have been made.
pub fn solve(x: &DataMatrix, cfg: &SolverConfig) -> Result<Decomposition> {
    cfg.validate()?;
    let x = x.as_matrix();
    let zsys = ZSystem::new(x)?;
    let mut state = init_state(x, cfg);
    let mut trace = Vec::with_capacity(cfg.max_iter.min(1024));
    let mut converged = false;

    for it in 1..=cfg.max_iter {
        let nuclear = primal_sweep(&mut state, x, cfg, &zsys).map_err(|e| at_iteration(e, it))?;
        let lagrangian = lagrangian::evaluate(&state, x, cfg, Some(nuclear))?;
        let (done, residual) = check_convergence(&state, x, cfg);
        trace.push(TraceRow {
            iteration: it,
            residual,
            mu: state.mu,
            lagrangian,
        });
        update_multipliers_and_mu(&mut state, x, cfg);
        if !state.is_finite() || !residual.is_finite() {
            return Err(Error::Numerical {
                iteration: Some(it),
                msg: "non-finite solver state".into(),
            });
        }
        if done {
            converged = true;
            break;
        }
    }

    Ok(Decomposition::new(
        x, state.z, state.l, state.e, trace, converged,
    ))
}

pub(crate) fn at_iteration(e: Error, it: usize) -> Error {
    match e {
        Error::Numerical { msg, .. } => Error::Numerical {
            iteration: Some(it),
            msg,
        },
        other => other,
    }
}
