use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Summary scores of one run, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub zeta_acc: f64,
    pub classification_accuracy: f64,
    pub offblock_ratio: f64,
}

/// `max(0, 1 - ||X_clean - X_rec||_F / ||X_clean||_F)`.
pub fn reconstruction_accuracy(clean: &DMatrix<f64>, recovered: &DMatrix<f64>) -> Result<f64> {
    if clean.shape() != recovered.shape() {
        return Err(Error::dim(format!(
            "clean {:?} vs recovered {:?}",
            clean.shape(),
            recovered.shape()
        )));
    }
    let scale = clean.norm();
    if scale == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    Ok((1.0 - (clean - recovered).norm() / scale).max(0.0))
}

/// Share of `sum |Z_ij|` that falls on pairs with different labels.
/// 0 means perfectly block-diagonal; an all-zero `Z` scores 0.
pub fn offblock_ratio(z: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    if z.nrows() != labels.len() || z.ncols() != labels.len() {
        return Err(Error::dim(format!(
            "{:?} coefficients for {} labels",
            z.shape(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    let mut off = 0.0;
    for (j, &lj) in labels.iter().enumerate() {
        for (i, &li) in labels.iter().enumerate() {
            let v = z[(i, j)].abs();
            total += v;
            if li != lj {
                off += v;
            }
        }
    }
    Ok(if total > 0.0 { off / total } else { 0.0 })
}

pub fn classification_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::dim(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}
