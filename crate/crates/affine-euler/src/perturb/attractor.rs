//! The attractor `theta_inf` estimated by the final snapshot, with a Cauchy ladder of
//! distances on geometric tau levels.

use serde::{Deserialize, Serialize};

use super::{CartField, RadialField, SolverError};
use crate::ball::{CartGrid, RadialGrid, Side};
use crate::fit::{linear_fit, DecayFit};

/// Minimum tau span a series must cover.
pub const MIN_SPAN: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub tau: f64,
    /// Weighted distance `||theta(tau) - theta_inf||_alpha`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorReport {
    pub tau_inf: f64,
    pub theta_inf_norm: f64,
    pub ladder: Vec<LadderPoint>,
    /// Residuals are non-increasing along the ladder from tau = 1 on.
    pub monotone_after_one: bool,
    /// Log-linear fit of the ladder from tau = 1 on; `None` when residuals vanish.
    pub envelope: Option<DecayFit>,
    pub predicted_rate: f64,
}

/// Ladder levels `2^(k/2) / 4` below `tau_end`.
pub fn ladder_levels(tau_end: f64) -> Vec<f64> {
    (0..).map(|k| 0.25 * 2f64.powf(0.5 * k as f64)).take_while(|t| *t < tau_end - 1e-9).collect()
}

/// Builds the report from snapshot times, the distance of each snapshot to the last one and
/// the norm of the last one. `predicted_rate` is the envelope exponent to compare against.
pub fn attractor_estimate(
    taus: &[f64],
    distances: &[f64],
    theta_inf_norm: f64,
    predicted_rate: f64,
) -> Result<AttractorReport, SolverError> {
    if taus.len() != distances.len() || taus.len() < 2 {
        return Err(SolverError::Config("attractor needs at least two snapshots".into()));
    }
    let (first, tau_inf) = (taus[0], taus[taus.len() - 1]);
    if tau_inf - first < MIN_SPAN {
        return Err(SolverError::Config(format!(
            "series spans {} in tau, need at least {MIN_SPAN}",
            tau_inf - first
        )));
    }
    let mut ladder: Vec<LadderPoint> = Vec::new();
    for level in ladder_levels(tau_inf) {
        let k = (0..taus.len() - 1)
            .min_by(|&a, &b| (taus[a] - level).abs().total_cmp(&(taus[b] - level).abs()))
            .expect("at least one snapshot");
        if ladder.last().is_some_and(|p| p.tau == taus[k]) {
            continue;
        }
        ladder.push(LadderPoint { tau: taus[k], residual: distances[k] });
    }
    let tail: Vec<&LadderPoint> = ladder.iter().filter(|p| p.tau >= 1.0 - 1e-9).collect();
    let monotone_after_one = tail.windows(2).all(|w| w[1].residual <= w[0].residual);
    let envelope = if tail.len() >= 2 && tail.iter().all(|p| p.residual > 0.0) {
        let xs: Vec<f64> = tail.iter().map(|p| p.tau).collect();
        let ys: Vec<f64> = tail.iter().map(|p| p.residual.ln()).collect();
        linear_fit(&xs, &ys).ok().map(|(rate, c, r2)| DecayFit {
            rate,
            amplitude: c.exp(),
            r_squared: r2,
            points: xs.len(),
        })
    } else {
        None
    };
    Ok(AttractorReport { tau_inf, theta_inf_norm, ladder, monotone_after_one, envelope, predicted_rate })
}

/// Attractor of a radial run, measured in `||.||_alpha` of the vector field `vartheta y / r`.
pub fn radial_attractor(
    snapshots: &[RadialField],
    grid: &RadialGrid,
    predicted_rate: f64,
) -> Result<AttractorReport, SolverError> {
    let last = snapshots.last().ok_or_else(|| SolverError::Config("empty series".into()))?;
    let alpha = grid.params.alpha;
    let taus: Vec<f64> = snapshots.iter().map(|s| s.tau).collect();
    let dist: Vec<f64> = snapshots
        .iter()
        .map(|s| {
            let d: Vec<f64> = s.theta.iter().zip(&last.theta).map(|(a, b)| a - b).collect();
            grid.weighted_norm(&d, alpha, Side::Both).sqrt()
        })
        .collect();
    let norm = grid.weighted_norm(&last.theta, alpha, Side::Both).sqrt();
    attractor_estimate(&taus, &dist, norm, predicted_rate)
}

/// Attractor of a Cartesian run, measured in `||.||_alpha`.
pub fn cartesian_attractor(
    snapshots: &[CartField],
    grid: &CartGrid,
    predicted_rate: f64,
) -> Result<AttractorReport, SolverError> {
    let last = snapshots.last().ok_or_else(|| SolverError::Config("empty series".into()))?;
    let alpha = grid.params.alpha;
    let taus: Vec<f64> = snapshots.iter().map(|s| s.tau).collect();
    let dist: Vec<f64> = snapshots
        .iter()
        .map(|s| {
            let d: Vec<_> = s.theta.iter().zip(&last.theta).map(|(a, b)| a - b).collect();
            grid.weighted_norm(&d, alpha, Side::Both).sqrt()
        })
        .collect();
    let norm = grid.weighted_norm(&last.theta, alpha, Side::Both).sqrt();
    attractor_estimate(&taus, &dist, norm, predicted_rate)
}
