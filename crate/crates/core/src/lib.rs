pub mod aslrc;
pub mod classifier;
pub mod cli;
pub mod corruption;
pub mod error;
pub mod latlrr;
mod linalg;
pub mod matrix_io;
pub mod metrics;
pub mod prox;
pub mod weights;

pub use error::{Error, Result};
