//! Lagrangian perturbations of affine motions: the nonlinear radial solver, the linearised
//! Cartesian solver and the attractor estimate.

pub mod attractor;
pub mod linear3d;
pub mod radial;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affine::{conformal_background, integrate_affine, AffineError, AffineTrajectory};
use crate::eulerian::Vec3;
use crate::frame::DerivedFrame;
use crate::params::GammaParams;
use crate::Mat3;

pub use crate::fit::{decay_fit, decay_fit_window, DecayFit};
pub use attractor::{attractor_estimate, cartesian_attractor, radial_attractor, AttractorReport};
pub use linear3d::solve_linear3d;
pub use radial::solve_radial;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("flow map degenerates at tau = {tau}: J = {j} near r = {r}")]
    Degenerate { tau: f64, j: f64, r: f64 },
    #[error("time step {dt} fell below the floor at tau = {tau}")]
    StepFloor { tau: f64, dt: f64 },
    #[error("non-finite state at tau = {0}")]
    NonFinite(f64),
    #[error("background is not conformal: |Lambda - Id| = {lambda_dev}, |Gamma*| = {gamma_star}")]
    NotConformal { lambda_dev: f64, gamma_star: f64 },
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("run aborted at tau = {tau}: {reason}")]
    Aborted { tau: f64, reason: String },
    #[error(transparent)]
    Background(#[from] AffineError),
}

/// Source of `mu`, `Lambda` and `Gamma*` as functions of `tau`.
pub trait Background: Sync {
    fn params(&self) -> &GammaParams;
    fn frame(&self, tau: f64) -> Result<DerivedFrame, AffineError>;
    fn tau_end(&self) -> f64;
}

impl Background for AffineTrajectory {
    fn params(&self) -> &GammaParams {
        AffineTrajectory::params(self)
    }

    fn frame(&self, tau: f64) -> Result<DerivedFrame, AffineError> {
        self.frame_at_tau(tau)
    }

    fn tau_end(&self) -> f64 {
        AffineTrajectory::tau_end(self)
    }
}

/// Integrates `(A0, A1)` far enough in physical time to cover `tau_end`.
pub fn trajectory_to_tau(
    params: &GammaParams,
    a0: &Mat3,
    a1: &Mat3,
    tau_end: f64,
    tol: f64,
) -> Result<AffineTrajectory, AffineError> {
    let mut t_end = 10.0;
    loop {
        let tr = integrate_affine(params, a0, a1, t_end, tol)?;
        if tr.tau_end() >= tau_end || t_end > 1e12 {
            return Ok(tr);
        }
        t_end *= 4.0;
    }
}

/// The isotropic background `a(t) Id` covering `tau_end`.
pub fn conformal_to_tau(params: &GammaParams, tau_end: f64, tol: f64) -> Result<AffineTrajectory, AffineError> {
    let mut t_end = 10.0;
    loop {
        let tr = conformal_background(params, t_end, tol)?;
        if tr.tau_end() >= tau_end || t_end > 1e12 {
            return Ok(tr);
        }
        t_end *= 4.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    RadialNonlinear,
    CartesianLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub cfl: f64,
    pub tau_end: f64,
    /// Spacing in tau between reported snapshots.
    pub output_every: f64,
    /// Largest allowed step in tau.
    pub max_dt: f64,
    /// Smallest step before a run is declared failed.
    pub min_dt: f64,
    /// Spacing in tau between retained snapshots; every output is passed to the observer.
    pub store_every: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { cfl: 0.4, tau_end: 8.0, output_every: 0.05, max_dt: 0.01, min_dt: 1e-9, store_every: 0.05 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(SolverError::Config(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.tau_end > 0.0) {
            return Err(SolverError::Config(format!("tau_end must be positive, got {}", self.tau_end)));
        }
        if !(self.output_every > 0.0) || !(self.max_dt > 0.0) || !(self.min_dt > 0.0) || !(self.store_every > 0.0) {
            return Err(SolverError::Config("output_every, store_every, max_dt and min_dt must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn output_times(&self) -> Vec<f64> {
        let n = (self.tau_end / self.output_every).round().max(1.0) as usize;
        (0..=n).map(|k| self.tau_end * k as f64 / n as f64).collect()
    }

    pub(crate) fn stores(&self, tau: f64) -> bool {
        let k = tau / self.store_every;
        (k - k.round()).abs() < 1e-6 || (tau - self.tau_end).abs() < 1e-12
    }
}

/// Radial perturbation `theta = vartheta(r) y / r` with velocity `v(r) y / r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub tau: f64,
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
}

/// Cartesian perturbation on every cell of a [`crate::ball::CartGrid`]; inactive cells hold zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartField {
    pub tau: f64,
    pub theta: Vec<Vec3>,
    pub v: Vec<Vec3>,
}

/// Snapshot series with step statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Series<F> {
    pub snapshots: Vec<F>,
    pub steps: usize,
    /// Largest change of any unknown in a single step.
    pub max_step_change: f64,
}

pub(crate) fn check_conformal(bg: &dyn Background) -> Result<(), SolverError> {
    let f = bg.frame(0.0)?;
    let lambda_dev = (f.lambda - Mat3::identity()).norm();
    let gamma_star = f.gamma_star.norm();
    if lambda_dev > 1e-10 || gamma_star > 1e-10 {
        return Err(SolverError::NotConformal { lambda_dev, gamma_star });
    }
    Ok(())
}

/// Classical fourth-order Runge-Kutta step for `y' = f(tau, y)` on flat vectors.
pub(crate) fn rk4_step<F>(f: &F, tau: f64, y: &[f64], dt: f64) -> Result<Vec<f64>, SolverError>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>, SolverError>,
{
    let axpy = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, k)| x + s * k).collect() };
    let k1 = f(tau, y)?;
    let k2 = f(tau + 0.5 * dt, &axpy(y, &k1, 0.5 * dt))?;
    let k3 = f(tau + 0.5 * dt, &axpy(y, &k2, 0.5 * dt))?;
    let k4 = f(tau + dt, &axpy(y, &k3, dt))?;
    Ok((0..y.len()).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

/// Drives fixed-CFL RK4 steps between output times; `dt_of` supplies the stable step at
/// each tau and `accept` rejects states (degeneracy), triggering step halving.
pub(crate) fn march<F, D, A, O>(
    cfg: &SolverConfig,
    y0: Vec<f64>,
    rhs: F,
    dt_of: D,
    accept: A,
    mut output: O,
) -> Result<(usize, f64), SolverError>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>, SolverError>,
    D: Fn(f64) -> Result<f64, SolverError>,
    A: Fn(f64, &[f64]) -> Result<(), SolverError>,
    O: FnMut(f64, &[f64]) -> Result<(), SolverError>,
{
    let mut y = y0;
    let mut tau = 0.0;
    let mut steps = 0;
    let mut max_change: f64 = 0.0;
    let times = cfg.output_times();
    output(0.0, &y)?;
    for &target in &times[1..] {
        while tau < target {
            let mut dt = dt_of(tau)?.min(cfg.max_dt);
            if target - tau <= dt * (1.0 + 1e-8) {
                dt = target - tau;
            }
            let mut rejected = None;
            loop {
                if dt < cfg.min_dt {
                    return Err(rejected.unwrap_or(SolverError::StepFloor { tau, dt }));
                }
                match rk4_step(&rhs, tau, &y, dt).and_then(|next| {
                    if next.iter().any(|x| !x.is_finite()) {
                        return Err(SolverError::NonFinite(tau + dt));
                    }
                    accept(tau + dt, &next).map(|_| next)
                }) {
                    Ok(next) => {
                        let change = next.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        max_change = max_change.max(change);
                        y = next;
                        tau = if target - (tau + dt) <= 1e-8 * dt { target } else { tau + dt };
                        steps += 1;
                        break;
                    }
                    Err(e @ (SolverError::Degenerate { .. } | SolverError::NonFinite(_))) => {
                        rejected = Some(e);
                        dt *= 0.5;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        output(tau, &y)?;
    }
    Ok((steps, max_change))
}
