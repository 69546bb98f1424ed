//! Python bindings. Matrices cross the boundary as lists of rows.

use lolrec::aslrc::{self, SolverConfig as CoreConfig, TraceRow};
use lolrec::classifier::{self, ClassifierConfig, ClassifierModel, LabelMatrix};
use lolrec::corruption::{self, SubspaceSpec};
use lolrec::matrix_io::DataMatrix;
use lolrec::{latlrr, metrics, prox};
use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(pylolrec, LolrecError, PyValueError);

pub type Rows = Vec<Vec<f64>>;

fn to_py(e: lolrec::Error) -> PyErr {
    LolrecError::new_err(format!("{}: {e}", e.kind()))
}

/// Row lists to a matrix; rows must be non-empty and equally long.
pub fn rows_to_matrix(rows: &[Vec<f64>]) -> lolrec::Result<DMatrix<f64>> {
    let n = rows
        .first()
        .map(Vec::len)
        .ok_or(lolrec::Error::EmptyInput)?;
    if n == 0 {
        return Err(lolrec::Error::EmptyInput);
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(lolrec::Error::Dimension(format!(
            "row {bad} has {} entries, expected {n}",
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn data(rows: &[Vec<f64>]) -> PyResult<DataMatrix> {
    rows_to_matrix(rows)
        .and_then(DataMatrix::new)
        .map_err(to_py)
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    rows_to_matrix(rows).map_err(to_py)
}

/// ALM settings shared by both solvers.
#[pyclass(from_py_object)]
#[derive(Clone)]
pub struct SolverConfig {
    #[pyo3(get, set)]
    pub alpha: f64,
    #[pyo3(get, set)]
    pub beta: f64,
    #[pyo3(get, set)]
    pub lam: f64,
    #[pyo3(get, set)]
    pub mu0: f64,
    #[pyo3(get, set)]
    pub eta: f64,
    #[pyo3(get, set)]
    pub mu_max: f64,
    #[pyo3(get, set)]
    pub tol: f64,
    #[pyo3(get, set)]
    pub max_iter: usize,
}

#[pymethods]
impl SolverConfig {
    #[new]
    #[pyo3(signature = (alpha=0.01, beta=0.01, lam=0.015, mu0=1e-6, eta=1.12, mu_max=1e10, tol=1e-6, max_iter=300))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        alpha: f64,
        beta: f64,
        lam: f64,
        mu0: f64,
        eta: f64,
        mu_max: f64,
        tol: f64,
        max_iter: usize,
    ) -> Self {
        SolverConfig {
            alpha,
            beta,
            lam,
            mu0,
            eta,
            mu_max,
            tol,
            max_iter,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "SolverConfig(alpha={}, beta={}, lam={}, mu0={}, eta={}, mu_max={}, tol={}, max_iter={})",
            self.alpha, self.beta, self.lam, self.mu0, self.eta, self.mu_max, self.tol, self.max_iter
        )
    }
}

impl SolverConfig {
    fn core(&self) -> CoreConfig {
        CoreConfig {
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lam,
            mu0: self.mu0,
            eta: self.eta,
            mu_max: self.mu_max,
            tol: self.tol,
            max_iter: self.max_iter,
            ..CoreConfig::default()
        }
    }
}

/// `X = XZ + LX + E` with the solver trace.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
pub struct Decomposition {
    #[pyo3(get)]
    pub z: Rows,
    #[pyo3(get)]
    pub l: Rows,
    #[pyo3(get)]
    pub e: Rows,
    /// `X Z`.
    #[pyo3(get)]
    pub principal: Rows,
    /// `L X`.
    #[pyo3(get)]
    pub salient: Rows,
    #[pyo3(get)]
    pub converged: bool,
    #[pyo3(get)]
    pub iterations: usize,
    #[pyo3(get)]
    pub residual: f64,
    /// `(iteration, residual, mu, lagrangian)` per sweep.
    #[pyo3(get)]
    pub trace: Vec<(usize, f64, f64, f64)>,
}

#[pymethods]
impl Decomposition {
    fn __repr__(&self) -> String {
        format!(
            "Decomposition(converged={}, iterations={}, residual={:e})",
            self.converged, self.iterations, self.residual
        )
    }
}

impl From<aslrc::Decomposition> for Decomposition {
    fn from(d: aslrc::Decomposition) -> Self {
        let row = |t: &TraceRow| (t.iteration, t.residual, t.mu, t.lagrangian);
        Decomposition {
            z: matrix_to_rows(&d.z),
            l: matrix_to_rows(&d.l),
            e: matrix_to_rows(&d.e),
            principal: matrix_to_rows(&d.principal),
            salient: matrix_to_rows(&d.salient),
            converged: d.converged,
            iterations: d.iterations,
            residual: d.residual,
            trace: d.trace.iter().map(row).collect(),
        }
    }
}

fn config_or_default(config: Option<SolverConfig>) -> CoreConfig {
    config.map_or_else(CoreConfig::default, |c| c.core())
}

/// Adaptive structure-constrained decomposition of `x` (d rows, N columns).
#[pyfunction]
#[pyo3(signature = (x, config=None))]
fn solve(py: Python<'_>, x: Rows, config: Option<SolverConfig>) -> PyResult<Decomposition> {
    let x = data(&x)?;
    let cfg = config_or_default(config);
    py.detach(|| aslrc::solve(&x, &cfg))
        .map(Into::into)
        .map_err(to_py)
}

/// Plain latent low-rank representation; only `lam` and the ALM settings of
/// `config` apply.
#[pyfunction]
#[pyo3(signature = (x, config=None))]
fn latlrr_solve(py: Python<'_>, x: Rows, config: Option<SolverConfig>) -> PyResult<Decomposition> {
    let x = data(&x)?;
    let cfg = config_or_default(config);
    py.detach(|| latlrr::latlrr_solve(&x, cfg.lambda, &cfg))
        .map(Into::into)
        .map_err(to_py)
}

/// Trained linear classifier `label = argmax C^T L x`.
#[pyclass(skip_from_py_object)]
pub struct Classifier {
    model: ClassifierModel,
}

#[pymethods]
impl Classifier {
    #[getter]
    fn classes(&self) -> usize {
        self.model.classes()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.model.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.model.iterations
    }

    /// `C`, d x classes.
    #[getter]
    fn coefficients(&self) -> Rows {
        matrix_to_rows(&self.model.c_star)
    }

    /// 0-based labels and the classes x N soft outputs for the columns of `x`.
    fn predict(&self, x: Rows) -> PyResult<(Vec<usize>, Rows)> {
        let (labels, soft) =
            classifier::predict_labels(&self.model, &matrix(&x)?).map_err(to_py)?;
        Ok((labels, matrix_to_rows(&soft)))
    }

    fn __repr__(&self) -> String {
        format!(
            "Classifier(classes={}, converged={}, iterations={})",
            self.model.classes(),
            self.model.converged,
            self.model.iterations
        )
    }
}

/// Train on features (d x N) with 0-based `labels`; the projection is the
/// identity.
#[pyfunction]
#[pyo3(signature = (features, labels, classes, max_iter=500))]
fn train_classifier(
    features: Rows,
    labels: Vec<usize>,
    classes: usize,
    max_iter: usize,
) -> PyResult<Classifier> {
    let h = LabelMatrix::from_labels(&labels, classes).map_err(to_py)?;
    let cfg = ClassifierConfig {
        max_iter,
        ..Default::default()
    };
    classifier::train_classifier(&matrix(&features)?, &h, &cfg)
        .map(|model| Classifier { model })
        .map_err(to_py)
}

/// Train on the salient features `L x` of raw samples `x`.
#[pyfunction]
#[pyo3(signature = (l, x, labels, classes, max_iter=500))]
fn train_with_projection(
    l: Rows,
    x: Rows,
    labels: Vec<usize>,
    classes: usize,
    max_iter: usize,
) -> PyResult<Classifier> {
    let h = LabelMatrix::from_labels(&labels, classes).map_err(to_py)?;
    let cfg = ClassifierConfig {
        max_iter,
        ..Default::default()
    };
    classifier::train_with_projection(&matrix(&l)?, &matrix(&x)?, &h, &cfg)
        .map(|model| Classifier { model })
        .map_err(to_py)
}

#[pyfunction]
fn reconstruction_accuracy(clean: Rows, recovered: Rows) -> PyResult<f64> {
    metrics::reconstruction_accuracy(&matrix(&clean)?, &matrix(&recovered)?).map_err(to_py)
}

#[pyfunction]
fn offblock_ratio(z: Rows, labels: Vec<usize>) -> PyResult<f64> {
    metrics::offblock_ratio(&matrix(&z)?, &labels).map_err(to_py)
}

#[pyfunction]
fn classification_accuracy(predicted: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    metrics::classification_accuracy(&predicted, &truth).map_err(to_py)
}

#[pyfunction]
fn scalar_shrink(x: f64, eps: f64) -> PyResult<f64> {
    prox::scalar_shrink(x, eps).map_err(to_py)
}

#[pyfunction]
fn svt(m: Rows, tau: f64) -> PyResult<Rows> {
    prox::svt(&matrix(&m)?, tau)
        .map(|r| matrix_to_rows(&r))
        .map_err(to_py)
}

#[pyfunction]
fn column_l21_shrink(m: Rows, tau: f64) -> PyResult<Rows> {
    prox::column_l21_shrink(&matrix(&m)?, tau)
        .map(|r| matrix_to_rows(&r))
        .map_err(to_py)
}

/// Union of `k` random subspaces; returns `(x, labels)`.
#[pyfunction]
#[pyo3(signature = (k=3, sub_dim=3, dim=50, n_per=20, disjoint=true, noise_sigma=0.0, seed=0))]
fn synth_subspaces(
    k: usize,
    sub_dim: usize,
    dim: usize,
    n_per: usize,
    disjoint: bool,
    noise_sigma: f64,
    seed: u64,
) -> PyResult<(Rows, Vec<usize>)> {
    let spec = SubspaceSpec {
        k,
        sub_dim,
        dim,
        n_per,
        disjoint,
        noise_sigma,
        seed,
    };
    let (x, labels) = corruption::synth_subspaces(&spec).map_err(to_py)?;
    Ok((matrix_to_rows(&x), labels))
}

#[pyfunction]
#[pyo3(signature = (classes=3, dim=20, n_per=60, spread=0.1, seed=0))]
fn synth_blobs(
    classes: usize,
    dim: usize,
    n_per: usize,
    spread: f64,
    seed: u64,
) -> PyResult<(Rows, Vec<usize>)> {
    let (x, labels) = corruption::synth_blobs(classes, dim, n_per, spread, seed).map_err(to_py)?;
    Ok((matrix_to_rows(&x), labels))
}

/// Replace `pct` percent of entries by uniform values in `[0, 1)`.
#[pyfunction]
#[pyo3(signature = (x, pct, seed=0))]
fn corrupt_random_pixels(x: Rows, pct: f64, seed: u64) -> PyResult<Rows> {
    corruption::corrupt_random_pixels(&matrix(&x)?, pct, seed)
        .map(|r| matrix_to_rows(&r))
        .map_err(to_py)
}

#[pymodule]
fn pylolrec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LolrecError", m.py().get_type::<LolrecError>())?;
    m.add_class::<SolverConfig>()?;
    m.add_class::<Decomposition>()?;
    m.add_class::<Classifier>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(latlrr_solve, m)?)?;
    m.add_function(wrap_pyfunction!(train_classifier, m)?)?;
    m.add_function(wrap_pyfunction!(train_with_projection, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruction_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(offblock_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(classification_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(scalar_shrink, m)?)?;
    m.add_function(wrap_pyfunction!(svt, m)?)?;
    m.add_function(wrap_pyfunction!(column_l21_shrink, m)?)?;
    m.add_function(wrap_pyfunction!(synth_subspaces, m)?)?;
    m.add_function(wrap_pyfunction!(synth_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(corrupt_random_pixels, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
