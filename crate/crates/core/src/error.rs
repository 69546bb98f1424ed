use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid shrinkage threshold {0} (must be finite and >= 0)")]
    InvalidThreshold(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure{}: {msg}", iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    Numerical {
        iteration: Option<usize>,
        msg: String,
    },

    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { required: usize, got: usize },

    #[error("classifier features are identically zero")]
    DegenerateFeatures,

    #[error("signal is identically zero")]
    DegenerateSignal,

    #[error("invalid label matrix: {0}")]
    InvalidLabels(String),

    #[error("invalid subspace spec: {0}")]
    InvalidSpec(String),

    #[error("value {value} outside [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical {
            iteration: None,
            msg: msg.into(),
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// Stable machine-readable tag, used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format(_) => "format",
            Error::Parse { .. } => "parse",
            Error::EmptyInput => "empty_input",
            Error::InvalidThreshold(_) => "invalid_threshold",
            Error::Dimension(_) => "dimension",
            Error::Numerical { .. } => "numerical",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::DegenerateFeatures => "degenerate_features",
            Error::DegenerateSignal => "degenerate_signal",
            Error::InvalidLabels(_) => "invalid_labels",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Range { .. } => "range",
            Error::InvalidConfig(_) => "invalid_config",
        }
    }
}
