//! Structure-constraint weights: Hadamard products, the fixed angle-based
//! weight and the augmented feature matrix `A = [LX; e^T]`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix_io::column_normalize;

/// Floor for the kernel width when all samples share one direction.
pub const SIGMA_FLOOR: f64 = 1e-12;

pub fn hadamard(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if p.shape() != q.shape() {
        return Err(Error::dim(format!(
            "hadamard: {:?} vs {:?}",
            p.shape(),
            q.shape()
        )));
    }
    Ok(p.component_mul(q))
}

/// Angle-based dissimilarity weight between every pair of samples.
#[derive(Debug, Clone)]
pub struct AngleWeight {
    /// `W_ij = 1 - exp(-B_ij / sigma)`, symmetric with zero diagonal.
    pub w: DMatrix<f64>,
    /// `B_ij = 1 - |<x_i*, x_j*>|` over unit-normalized columns.
    pub b: DMatrix<f64>,
    /// Mean of all `N^2` entries of `B`, floored at [`SIGMA_FLOOR`].
    pub sigma: f64,
}

pub fn sclrr_weight(x: &DMatrix<f64>) -> Result<AngleWeight> {
    let n = x.ncols();
    if n < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            got: n,
        });
    }
    let xn = column_normalize(x);
    let gram = xn.transpose() * &xn;
    let mut b = gram.map(|g| (1.0 - g.abs()).max(0.0));
    // a unit column has |<x, x>| = 1 exactly; zero columns keep B_ii = 1
    for i in 0..n {
        if xn.column(i).norm() > 0.0 {
            b[(i, i)] = 0.0;
        }
    }
    let sigma = (b.sum() / (n * n) as f64).max(SIGMA_FLOOR);
    let w = b.map(|v| 1.0 - (-v / sigma).exp());
    Ok(AngleWeight { w, b, sigma })
}

/// `A = [LX; e^T]`, a `(d + 1) x N` matrix.
#[derive(Debug, Clone)]
pub struct AugmentedFeatures {
    pub a: DMatrix<f64>,
}

pub fn build_augmented(l: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<AugmentedFeatures> {
    if l.ncols() != x.nrows() {
        return Err(Error::dim(format!(
            "projection {:?} cannot act on data {:?}",
            l.shape(),
            x.shape()
        )));
    }
    let lx = l * x;
    let (d, n) = lx.shape();
    let mut a = DMatrix::zeros(d + 1, n);
    a.rows_mut(0, d).copy_from(&lx);
    a.row_mut(d).fill(1.0);
    Ok(AugmentedFeatures { a })
}

/// `A^T A = (LX)^T (LX) + e e^T`, without forming `A`.
pub(crate) fn augmented_gram(lx: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = lx.transpose() * lx;
    g.add_scalar_mut(1.0);
    g
}
