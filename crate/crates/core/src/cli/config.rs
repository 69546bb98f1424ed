use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aslrc::{SolverConfig, PARAMETER_GRID};
use crate::corruption::SubspaceSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Aslrc,
    Latlrr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Aslrc => "aslrc",
            Method::Latlrr => "latlrr",
        }
    }
}

/// Corruption applied by `denoise`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Replace `pct` percent of entries by uniform values.
    Random,
    /// Invert `pct` percent of 8-bit gray values.
    Invert,
    /// White Gaussian noise at each SNR in `snrs`.
    Gaussian,
}

/// Every experiment setting. JSON files use these field names as flat keys;
/// missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Data matrix CSV, PGM image, or directory of PGM images.
    pub input: Option<PathBuf>,
    /// Labels CSV (one 1-based class index per line) for `classify`/`grid`.
    pub labels: Option<PathBuf>,
    pub out: PathBuf,
    /// Image size used to load PGM input and to draw recovery panels.
    pub image_width: Option<usize>,
    pub image_height: Option<usize>,
    pub panel_samples: usize,

    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub mu0: f64,
    pub eta: f64,
    pub mu_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,

    pub methods: Vec<Method>,
    pub protocol: Protocol,
    pub pcts: Vec<f64>,
    pub snrs: Vec<f64>,
    /// Independent corruption draws per sweep point.
    pub repeats: usize,
    pub train_per_class: Vec<usize>,
    pub splits: usize,
    pub grid: Vec<f64>,

    /// Union-of-subspaces instance for `bench-synth`.
    pub subspaces: usize,
    pub sub_dim: usize,
    pub dim: usize,
    pub n_per: usize,
    pub disjoint: bool,
    pub noise_sigma: f64,

    /// Gaussian blobs used by `classify` and `grid` without `input`.
    pub classes: usize,
    pub blob_dim: usize,
    pub blob_per_class: usize,
    pub blob_spread: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        let spec = SubspaceSpec::default();
        ExperimentConfig {
            input: None,
            labels: None,
            out: PathBuf::from("out"),
            image_width: None,
            image_height: None,
            panel_samples: 8,
            alpha: solver.alpha,
            beta: solver.beta,
            lambda: solver.lambda,
            mu0: solver.mu0,
            eta: solver.eta,
            mu_max: solver.mu_max,
            tol: solver.tol,
            max_iter: solver.max_iter,
            seed: solver.seed,
            methods: vec![Method::Aslrc, Method::Latlrr],
            protocol: Protocol::Random,
            pcts: vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            snrs: vec![10.0],
            repeats: 1,
            train_per_class: vec![30],
            splits: 10,
            grid: PARAMETER_GRID.to_vec(),
            subspaces: spec.k,
            sub_dim: spec.sub_dim,
            dim: spec.dim,
            n_per: spec.n_per,
            disjoint: spec.disjoint,
            noise_sigma: spec.noise_sigma,
            classes: 3,
            blob_dim: 20,
            blob_per_class: 60,
            blob_spread: 0.1,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.input {
            self.input = Some(v.clone());
        }
        if let Some(v) = &o.labels {
            self.labels = Some(v.clone());
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(m) = o.method {
            self.methods = vec![m];
        }
        self.seed = o.seed.unwrap_or(self.seed);
        self.alpha = o.alpha.unwrap_or(self.alpha);
        self.beta = o.beta.unwrap_or(self.beta);
        self.lambda = o.lambda.unwrap_or(self.lambda);
        self.tol = o.tol.unwrap_or(self.tol);
        self.max_iter = o.max_iter.unwrap_or(self.max_iter);
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lambda,
            mu0: self.mu0,
            eta: self.eta,
            mu_max: self.mu_max,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }

    pub fn subspace_spec(&self) -> SubspaceSpec {
        SubspaceSpec {
            k: self.subspaces,
            sub_dim: self.sub_dim,
            dim: self.dim,
            n_per: self.n_per,
            disjoint: self.disjoint,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        }
    }

    pub fn image_size(&self) -> Option<(usize, usize)> {
        self.image_width.zip(self.image_height)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver().validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        for p in self.input.iter().chain(&self.labels) {
            if !p.exists() {
                return Err(Error::InvalidConfig(format!(
                    "{} does not exist",
                    p.display()
                )));
            }
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if self.image_width.is_some() != self.image_height.is_some() {
            return bad("image_width and image_height go together");
        }
        if self.image_size().is_some_and(|(w, h)| w == 0 || h == 0) {
            return bad("image size must be positive");
        }
        if self.repeats == 0 || self.splits == 0 {
            return bad("repeats and splits must be positive");
        }
        if self.train_per_class.is_empty() || self.train_per_class.contains(&0) {
            return bad("train_per_class needs positive counts");
        }
        if self.pcts.iter().any(|p| !(0.0..=100.0).contains(p)) {
            return bad("pcts must lie in [0, 100]");
        }
        if self.snrs.iter().any(|s| !s.is_finite()) {
            return bad("snrs must be finite");
        }
        if self.grid.is_empty() || self.grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return bad("grid needs finite nonnegative values");
        }
        if !(self.blob_spread.is_finite() && self.blob_spread >= 0.0) {
            return bad("blob_spread must be finite and >= 0");
        }
        Ok(())
    }

    /// Canonical JSON of the resolved config.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`Self::canonical_json`], lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
