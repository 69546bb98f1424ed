use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::aslrc::TraceRow;
use crate::error::{Error, Result};
use crate::matrix_io::{encode_pgm, format_matrix_csv, ImageGrid};

#[derive(Debug, Clone, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Output directory plus the bookkeeping that ends up in `manifest.json`.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
    phases: Vec<Phase>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            phases: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Run `f`, recording its wall-clock time under `name`.
    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self);
        self.phases.push(Phase {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_matrix(&mut self, name: &str, m: &DMatrix<f64>) -> Result<()> {
        self.write_bytes(name, format_matrix_csv(m).as_bytes())
    }

    pub fn write_pgm(&mut self, name: &str, g: &ImageGrid) -> Result<()> {
        self.write_bytes(name, &encode_pgm(g))
    }

    pub fn write_table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_trace(&mut self, name: &str, trace: &[TraceRow]) -> Result<()> {
        let rows: Vec<Vec<String>> = trace
            .iter()
            .map(|t| {
                vec![
                    t.iteration.to_string(),
                    t.residual.to_string(),
                    t.mu.to_string(),
                    t.lagrangian.to_string(),
                ]
            })
            .collect();
        self.write_table(name, &["iteration", "residual", "mu", "lagrangian"], &rows)
    }

    /// Write `manifest.json`: config and its hash, toolkit version, phase
    /// timings and the list of artifacts.
    pub fn finish(mut self, subcommand: &str, cfg: &ExperimentConfig) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            tool: &'static str,
            version: &'static str,
            subcommand: &'a str,
            config_sha256: String,
            config: &'a ExperimentConfig,
            phases: &'a [Phase],
            outputs: &'a [String],
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            config_sha256: cfg.hash(),
            config: cfg,
            phases: &self.phases,
            outputs: &self.files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.write_bytes("manifest.json", text.as_bytes())?;
        Ok(self.dir.join("manifest.json"))
    }
}

pub fn fmt(v: f64) -> String {
    v.to_string()
}
