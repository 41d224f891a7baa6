//! Run directory writer: CSV series, JSON documents and the manifest that ties every file to
//! the operation that produced it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "affine-lab/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub file: String,
    pub operation: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    schema: &'static str,
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a C,
    status: &'a str,
    artifacts: &'a [Artifact],
}

pub struct RunDir {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    /// Writes numeric rows under `headers`.
    pub fn csv(&mut self, name: &str, operation: &str, headers: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let text: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
        self.csv_text(name, operation, headers, &text)
    }

    pub fn csv_text(&mut self, name: &str, operation: &str, headers: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e),
        })?;
        let wrap = |e: csv::Error| CliError::Io { path: path.display().to_string(), source: std::io::Error::other(e) };
        w.write_record(headers).map_err(wrap)?;
        for r in rows {
            w.write_record(r).map_err(wrap)?;
        }
        w.flush().map_err(io_err(&path))?;
        self.record(name, operation, headers.iter().map(|s| s.to_string()).collect());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, operation: &str, value: &T) -> Result<(), CliError> {
        self.write_json(name, value)?;
        self.record(name, operation, Vec::new());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::numerical(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(io_err(&path))
    }

    fn record(&mut self, name: &str, operation: &str, columns: Vec<String>) {
        self.artifacts.push(Artifact { file: name.into(), operation: operation.into(), columns });
    }

    /// Writes `manifest.json` listing every artifact written so far.
    pub fn finish<C: Serialize>(self, command: &str, seed: u64, config: &C, status: &str) -> Result<(), CliError> {
        let m = Manifest {
            schema: SCHEMA_VERSION,
            tool: "affine-lab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            status,
            artifacts: &self.artifacts,
        };
        self.write_json("manifest.json", &m)
    }
}
