//! Linear classifier on salient features.
//!
//! Training solves `min ||E^C||_1  s.t.  H^T = F^T C + E^C` by inexact ALM,
//! where `F = L* X` are the training features and `H` the one-hot labels.
//! A new sample `x` gets the soft label `C*^T L* x` and the class of its
//! largest entry.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::aslrc::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::SpdFactor;
use crate::prox::{max_abs, uniform_shrink};

/// Relative ridge added to `F F^T` so rank-deficient features still have a
/// unique least-squares step.
pub const RIDGE_RTOL: f64 = 1e-8;

/// One-hot label matrix `H` (`c x N`).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    h: DMatrix<f64>,
}

impl LabelMatrix {
    /// Validate that every column holds a single 1 and zeros elsewhere.
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (j, col) in h.column_iter().enumerate() {
            let ones = col.iter().filter(|&&v| v == 1.0).count();
            let zeros = col.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != col.len() {
                return Err(Error::InvalidLabels(format!("column {j} is not one-hot")));
            }
        }
        Ok(LabelMatrix { h })
    }

    /// One-hot encode 0-based `labels` over `classes` classes.
    pub fn from_labels(labels: &[usize], classes: usize) -> Result<Self> {
        if labels.is_empty() || classes == 0 {
            return Err(Error::EmptyInput);
        }
        let mut h = DMatrix::zeros(classes, labels.len());
        for (j, &l) in labels.iter().enumerate() {
            if l >= classes {
                return Err(Error::InvalidLabels(format!(
                    "label {l} at position {j} with {classes} classes"
                )));
            }
            h[(l, j)] = 1.0;
        }
        Ok(LabelMatrix { h })
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn classes(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.h.ncols()
    }

    /// 0-based class of every column.
    pub fn labels(&self) -> Vec<usize> {
        self.h
            .column_iter()
            .map(|c| c.iter().position(|&v| v == 1.0).unwrap_or(0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub mu0: f64,
    pub eta: f64,
    pub mu_max: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            mu0: 1e-6,
            eta: 1.12,
            mu_max: 1e10,
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

impl From<&SolverConfig> for ClassifierConfig {
    fn from(c: &SolverConfig) -> Self {
        ClassifierConfig {
            mu0: c.mu0,
            eta: c.eta,
            mu_max: c.mu_max,
            tol: c.tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifierModel {
    /// `d x c`.
    pub c_star: DMatrix<f64>,
    /// `d x d` projection applied to raw samples before `c_star`.
    pub l_star: DMatrix<f64>,
    /// `N x c` training error `E^C`.
    pub training_error: DMatrix<f64>,
    /// Ridge added to `F F^T`.
    pub delta: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Final `||H^T - F^T C - E^C||_inf`.
    pub residual: f64,
}

/// Train on precomputed features (`d x N`); the model's projection is the
/// identity.
pub fn train_classifier(
    features: &DMatrix<f64>,
    h: &LabelMatrix,
    cfg: &ClassifierConfig,
) -> Result<ClassifierModel> {
    let (d, n) = features.shape();
    if n != h.n_samples() {
        return Err(Error::dim(format!(
            "{n} feature columns for {} labels",
            h.n_samples()
        )));
    }
    if n < h.classes() {
        return Err(Error::InsufficientSamples {
            required: h.classes(),
            got: n,
        });
    }
    if !features.iter().all(|v| v.is_finite()) {
        return Err(Error::numerical("non-finite features"));
    }
    if features.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateFeatures);
    }
    if !(cfg.mu0 > 0.0 && cfg.eta > 1.0 && cfg.mu_max >= cfg.mu0 && cfg.tol > 0.0) {
        return Err(Error::InvalidConfig(format!("{cfg:?}")));
    }

    let mut gram = features * features.transpose();
    let delta = RIDGE_RTOL * gram.trace() / d as f64;
    for i in 0..d {
        gram[(i, i)] += delta;
    }
    let factor = SpdFactor::new(gram)?;
    let ft = features.transpose();
    let ht = h.as_matrix().transpose();

    let mut c = DMatrix::zeros(d, h.classes());
    let mut e = DMatrix::zeros(n, h.classes());
    let mut y = DMatrix::zeros(n, h.classes());
    let mut mu = cfg.mu0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        c = factor.solve(&(features * (&ht - &e + &y / mu)));
        let fit = &ft * &c;
        e = uniform_shrink(&(&ht - &fit + &y / mu), 1.0 / mu)?;
        let res = &ht - &fit - &e;
        residual = max_abs(&res);
        y += res * mu;
        mu = (cfg.eta * mu).min(cfg.mu_max);
        if !residual.is_finite() {
            return Err(Error::Numerical {
                iteration: Some(iterations),
                msg: "non-finite classifier residual".into(),
            });
        }
        if residual < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(ClassifierModel {
        c_star: c,
        l_star: DMatrix::identity(d, d),
        training_error: e,
        delta,
        converged,
        iterations,
        residual,
    })
}

/// Train on `L* X` and keep `L*` for prediction on raw samples.
pub fn train_with_projection(
    l_star: &DMatrix<f64>,
    x: &DMatrix<f64>,
    h: &LabelMatrix,
    cfg: &ClassifierConfig,
) -> Result<ClassifierModel> {
    if l_star.ncols() != x.nrows() || !l_star.is_square() {
        return Err(Error::dim(format!(
            "projection {:?} for data {:?}",
            l_star.shape(),
            x.shape()
        )));
    }
    let mut model = train_classifier(&(l_star * x), h, cfg)?;
    model.l_star = l_star.clone();
    Ok(model)
}

impl ClassifierModel {
    pub fn classes(&self) -> usize {
        self.c_star.ncols()
    }

    /// `C*^T L*` (`c x d`).
    pub fn projector(&self) -> DMatrix<f64> {
        self.c_star.transpose() * &self.l_star
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax<'a>(values: impl IntoIterator<Item = &'a f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Soft labels `C*^T L* X_test` (`c x M`) and the 0-based predicted class of
/// every column.
pub fn predict_labels(
    model: &ClassifierModel,
    x_test: &DMatrix<f64>,
) -> Result<(Vec<usize>, DMatrix<f64>)> {
    if x_test.nrows() != model.l_star.ncols() {
        return Err(Error::dim(format!(
            "test data has {} rows, model expects {}",
            x_test.nrows(),
            model.l_star.ncols()
        )));
    }
    let soft = model.projector() * x_test;
    let labels = soft.column_iter().map(|c| argmax(c.iter())).collect();
    Ok((labels, soft))
}

/// Single-sample form of [`predict_labels`].
pub fn predict_one(model: &ClassifierModel, x: &DVector<f64>) -> Result<(usize, DVector<f64>)> {
    let m = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    let (labels, soft) = predict_labels(model, &m)?;
    Ok((labels[0], soft.column(0).into_owned()))
}
