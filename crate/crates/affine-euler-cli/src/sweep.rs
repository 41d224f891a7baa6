//! Parameter sweeps: the cartesian product of the `[sweep]` axes, one run directory per cell.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Kind, RunConfig};
use crate::error::CliError;
use crate::experiments::{self, Summary};
use crate::output::RunDir;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub gamma: f64,
    pub delta: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub cell: Cell,
    pub status: String,
    pub failures: Vec<String>,
    pub error: Option<String>,
    #[serde(flatten)]
    pub summary: Summary,
}

impl CellResult {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

fn axis(values: &[f64], fallback: f64) -> Vec<f64> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

/// Cells in row-major order over gamma, delta, amplitude.
pub fn cells(cfg: &RunConfig) -> Result<Vec<Cell>, CliError> {
    let s = &cfg.sweep;
    if s.gammas.is_empty() && s.deltas.is_empty() && s.amplitudes.is_empty() {
        return Err(CliError::config("sweep needs at least one of sweep.gammas, sweep.deltas, sweep.amplitudes"));
    }
    let mut out = Vec::new();
    for &gamma in &axis(&s.gammas, cfg.params.gamma) {
        for &delta in &axis(&s.deltas, cfg.params.delta) {
            for &amplitude in &axis(&s.amplitudes, cfg.data.theta_amplitude) {
                out.push(Cell { index: out.len(), gamma, delta, amplitude });
            }
        }
    }
    Ok(out)
}

fn cell_config(cfg: &RunConfig, cell: &Cell) -> RunConfig {
    let mut c = cfg.clone();
    c.params.gamma = cell.gamma;
    c.params.delta = cell.delta;
    c.data.theta_amplitude = cell.amplitude;
    c.sweep = Default::default();
    c
}

fn fmt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Runs every cell; configuration errors in any cell abort before computing, numerical
/// failures are recorded and the sweep continues.
pub fn run(kind: Kind, cfg: &RunConfig, dir: &Path) -> Result<Vec<CellResult>, CliError> {
    if kind == Kind::Verify {
        return Err(CliError::config("verify has no parameters to sweep"));
    }
    let cells = cells(cfg)?;
    for cell in &cells {
        cell_config(cfg, cell).validate(kind).map_err(|e| CliError::config(format!("cell {}: {e}", cell.index)))?;
    }
    let mut out = RunDir::create(dir)?;
    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|cell| {
            let sub = dir.join(format!("cell-{:03}", cell.index));
            match experiments::run(kind, &cell_config(cfg, cell), &sub) {
                Ok(o) => CellResult {
                    cell: cell.clone(),
                    status: if o.verdict.passed() { "pass" } else { "fail" }.into(),
                    failures: o.verdict.failures().into_iter().map(String::from).collect(),
                    error: None,
                    summary: o.summary,
                },
                Err(e) => CellResult {
                    cell: cell.clone(),
                    status: "error".into(),
                    failures: Vec::new(),
                    error: Some(e.to_string()),
                    summary: Summary::default(),
                },
            }
        })
        .collect();
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let ratio = r.summary.mu0.zip(r.summary.mu1).map(|(a, b)| a / b);
            vec![
                r.cell.index.to_string(),
                r.cell.gamma.to_string(),
                r.cell.delta.to_string(),
                r.cell.amplitude.to_string(),
                fmt(r.summary.mu1),
                fmt(r.summary.mu0),
                fmt(ratio),
                fmt(r.summary.v_rate),
                fmt(r.summary.b_rate),
                r.status.clone(),
            ]
        })
        .collect();
    out.csv_text(
        "summary.csv",
        "sweep",
        &["cell", "gamma", "delta", "amplitude", "mu1", "mu0", "mu0_over_mu1", "v_rate", "b_rate", "status"],
        &rows,
    )?;
    out.json("sweep.json", "sweep", &results)?;
    let status = if results.iter().all(CellResult::passed) { "pass" } else { "fail" };
    out.finish(&format!("sweep {}", kind.name()), cfg.seed, cfg, status)?;
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_axes_fall_back_to_template() {
        let mut cfg = RunConfig::default();
        assert!(cells(&cfg).is_err());
        cfg.sweep.gammas = vec![1.4, 2.0];
        cfg.sweep.amplitudes = vec![1e-3, 1e-4, 1e-5];
        let c = cells(&cfg).unwrap();
        assert_eq!(c.len(), 6);
        assert!(c.iter().all(|c| c.delta == 1.0));
        assert_eq!((c[3].gamma, c[3].amplitude), (2.0, 1e-3));
    }
}
