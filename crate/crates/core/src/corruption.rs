//! Synthetic data and the corruption protocols used by the benchmarks.
//!
//! Every generator seeds its own `ChaCha8Rng`, so outputs depend only on the
//! inputs and the seed.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_io::DataMatrix;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Union-of-subspaces generator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSpec {
    /// Number of subspaces.
    pub k: usize,
    pub sub_dim: usize,
    /// Ambient dimension.
    pub dim: usize,
    /// Samples per subspace.
    pub n_per: usize,
    /// Draw the subspaces from disjoint coordinate blocks, then rotate.
    pub disjoint: bool,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SubspaceSpec {
    fn default() -> Self {
        SubspaceSpec {
            k: 3,
            sub_dim: 3,
            dim: 50,
            n_per: 20,
            disjoint: true,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SubspaceSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.k == 0 || self.sub_dim == 0 || self.dim == 0 {
            return bad("k, sub_dim and dim must be positive".into());
        }
        if self.sub_dim > self.dim {
            return bad(format!("sub_dim {} exceeds dim {}", self.sub_dim, self.dim));
        }
        if self.disjoint && self.k * self.sub_dim > self.dim {
            return bad(format!(
                "{} disjoint {}-dim subspaces do not fit in dimension {}",
                self.k, self.sub_dim, self.dim
            ));
        }
        if self.n_per < self.sub_dim {
            return bad(format!("n_per {} < sub_dim {}", self.n_per, self.sub_dim));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma {}", self.noise_sigma));
        }
        Ok(())
    }
}

/// Orthonormal basis of the column space of a full-column-rank matrix.
fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    let q = m.qr().q();
    q.columns(0, cols).into_owned()
}

/// Samples from a union of subspaces, grouped by subspace. Returns the data
/// and the 0-based subspace label of every column.
///
/// Combination coefficients have variance `dim / (2 sub_dim)`, so every ambient
/// coordinate of a noiseless sample has variance 1/2.
pub fn synth_subspaces(spec: &SubspaceSpec) -> Result<(DataMatrix, Vec<usize>)> {
    spec.validate()?;
    let mut rng = rng(spec.seed);
    let d = spec.dim;
    let bases: Vec<DMatrix<f64>> = if spec.disjoint {
        let rotation = orthonormalize(gaussian(d, d, &mut rng));
        (0..spec.k)
            .map(|i| {
                let block = rotation
                    .columns(i * spec.sub_dim, spec.sub_dim)
                    .into_owned();
                let mix = orthonormalize(gaussian(spec.sub_dim, spec.sub_dim, &mut rng));
                block * mix
            })
            .collect()
    } else {
        (0..spec.k)
            .map(|_| orthonormalize(gaussian(d, spec.sub_dim, &mut rng)))
            .collect()
    };

    let n = spec.k * spec.n_per;
    let coeff_sd = (d as f64 / (2.0 * spec.sub_dim as f64)).sqrt();
    let mut x = DMatrix::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    for (i, basis) in bases.iter().enumerate() {
        let coeffs = gaussian(spec.sub_dim, spec.n_per, &mut rng) * coeff_sd;
        x.columns_mut(i * spec.n_per, spec.n_per)
            .copy_from(&(basis * coeffs));
        labels.extend(std::iter::repeat_n(i, spec.n_per));
    }
    if spec.noise_sigma > 0.0 {
        x += gaussian(d, n, &mut rng) * spec.noise_sigma;
    }
    Ok((DataMatrix::new(x)?, labels))
}

/// Nonnegative union of `k` subspaces of dimension `sub_dim`, scaled so the
/// largest entry is 1 (an image-like matrix in `[0, 1]` of rank
/// `k * sub_dim`).
pub fn synth_nonnegative_subspaces(
    dim: usize,
    k: usize,
    sub_dim: usize,
    n_per: usize,
    seed: u64,
) -> Result<(DataMatrix, Vec<usize>)> {
    if dim == 0 || k == 0 || sub_dim == 0 || n_per == 0 {
        return Err(Error::InvalidSpec("all sizes must be positive".into()));
    }
    let mut rng = rng(seed);
    let n = k * n_per;
    let mut x = DMatrix::zeros(dim, n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..k {
        let basis = DMatrix::from_fn(dim, sub_dim, |_, _| rng.random::<f64>());
        let coeffs = DMatrix::from_fn(sub_dim, n_per, |_, _| rng.random::<f64>());
        x.columns_mut(i * n_per, n_per).copy_from(&(basis * coeffs));
        labels.extend(std::iter::repeat_n(i, n_per));
    }
    let top = x.max();
    if top > 0.0 {
        x /= top;
    }
    Ok((DataMatrix::new(x)?, labels))
}

/// Gaussian blobs around `classes` random centres on the unit sphere,
/// grouped by class.
pub fn synth_blobs(
    classes: usize,
    dim: usize,
    n_per: usize,
    spread: f64,
    seed: u64,
) -> Result<(DataMatrix, Vec<usize>)> {
    if classes == 0 || dim == 0 || n_per == 0 {
        return Err(Error::InvalidSpec("all sizes must be positive".into()));
    }
    let mut rng = rng(seed);
    let mut centres = gaussian(dim, classes, &mut rng);
    for mut c in centres.column_iter_mut() {
        let norm = c.norm();
        if norm > 0.0 {
            c /= norm;
        }
    }
    let n = classes * n_per;
    let mut x = DMatrix::zeros(dim, n);
    let mut labels = Vec::with_capacity(n);
    for c in 0..classes {
        for s in 0..n_per {
            let noise = gaussian(dim, 1, &mut rng) * spread;
            x.column_mut(c * n_per + s)
                .copy_from(&(centres.column(c) + noise.column(0)));
            labels.push(c);
        }
    }
    Ok((DataMatrix::new(x)?, labels))
}

/// Add white Gaussian noise with `10 log10(P_signal / P_noise) = snr_db` in
/// expectation, `P_signal` being the mean squared entry of `x`.
pub fn add_gaussian_noise_snr(x: &DMatrix<f64>, snr_db: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !snr_db.is_finite() {
        return Err(Error::InvalidConfig(format!("snr_db = {snr_db}")));
    }
    let power = x.norm_squared() / x.len().max(1) as f64;
    if power == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    let sd = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = rng(seed);
    Ok(x + gaussian(x.nrows(), x.ncols(), &mut rng) * sd)
}

fn check_pct(pct: f64) -> Result<()> {
    if (0.0..=100.0).contains(&pct) {
        Ok(())
    } else {
        Err(Error::Range {
            value: pct,
            lo: 0.0,
            hi: 100.0,
        })
    }
}

/// Column-major positions of `round(pct / 100 * len)` entries chosen
/// uniformly without replacement.
pub fn corrupted_positions(len: usize, pct: f64, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    check_pct(pct)?;
    let count = ((pct / 100.0) * len as f64).round() as usize;
    Ok(sample(rng, len, count.min(len)).into_vec())
}

/// Replace a random `pct` percent of the entries by uniform values in `[0, 1)`.
pub fn corrupt_random_pixels(x: &DMatrix<f64>, pct: f64, seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = rng(seed);
    let positions = corrupted_positions(x.len(), pct, &mut rng)?;
    let mut out = x.clone();
    for p in positions {
        out[p] = rng.random::<f64>();
    }
    Ok(out)
}

/// Invert a random `pct` percent of 8-bit gray values: `g -> 256 - g`,
/// clamped to 255 (so 0 maps to 255).
pub fn invert_pixels(x_raw: &DMatrix<f64>, pct: f64, seed: u64) -> Result<DMatrix<f64>> {
    if let Some(&v) = x_raw.iter().find(|v| !(0.0..=255.0).contains(*v)) {
        return Err(Error::Range {
            value: v,
            lo: 0.0,
            hi: 255.0,
        });
    }
    let mut rng = rng(seed);
    let positions = corrupted_positions(x_raw.len(), pct, &mut rng)?;
    let mut out = x_raw.clone();
    for p in positions {
        out[p] = (256.0 - out[p]).min(255.0);
    }
    Ok(out)
}
