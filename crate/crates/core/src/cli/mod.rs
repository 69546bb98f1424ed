//! Command-line experiment harness.
//!
//! Settings come from a flat JSON config (`--config`) with individual flags
//! taking precedence. Every run writes its CSV/PGM artifacts plus a
//! `manifest.json` into the output directory. Failures print one JSON line
//! `{"error": <kind>, "message": <text>}` on stderr and exit nonzero.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ExperimentConfig, Method, Overrides, Protocol};
use output::Artifacts;

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "lolrec", version, about = "Latent low-rank coding experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Decompose one data matrix into XZ + LX + E.
    Decompose,
    /// Corrupt clean data over a sweep and score the recoveries.
    Denoise,
    /// Train/test splits with the salient-feature classifier.
    Classify,
    /// Solve a synthetic union-of-subspaces instance.
    BenchSynth,
    /// Classification accuracy over an alpha x beta grid.
    Grid,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Decompose => "decompose",
            Command::Denoise => "denoise",
            Command::Classify => "classify",
            Command::BenchSynth => "bench-synth",
            Command::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON config file with flat keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Data matrix CSV, PGM image, or directory of PGM images.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Labels CSV with one 1-based class index per line.
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            input: self.input.clone(),
            labels: self.labels.clone(),
            out: self.out.clone(),
            seed: self.seed,
            method: self.method,
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lambda,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// Merge the config file with the flags and validate the result.
pub fn resolve_config(flags: &Flags) -> Result<ExperimentConfig> {
    let mut cfg = match &flags.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&flags.overrides());
    cfg.validate()?;
    Ok(cfg)
}

/// Run one subcommand; returns the path of the written manifest.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<PathBuf> {
    let mut out = Artifacts::create(&cfg.out)?;
    match command {
        Command::Decompose => commands::decompose(cfg, &mut out)?,
        Command::Denoise => commands::denoise(cfg, &mut out)?,
        Command::Classify => commands::classify(cfg, &mut out)?,
        Command::BenchSynth => commands::bench_synth(cfg, &mut out)?,
        Command::Grid => commands::grid(cfg, &mut out)?,
    }
    out.finish(command.name(), cfg)
}

/// Process exit code for a failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) => 2,
        Error::Io { .. } | Error::Format(_) | Error::Parse { .. } => 3,
        Error::Numerical { .. } => 4,
        _ => 1,
    }
}

pub fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

/// Parse `args`, run, report. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or_default();
            eprintln!(
                "{}",
                error_line("usage", first.trim_start_matches("error: "))
            );
            return 2;
        }
    };
    match resolve_config(&cli.flags).and_then(|cfg| run(cli.command, &cfg)) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            0
        }
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            exit_code(&e)
        }
    }
}
