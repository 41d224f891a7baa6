//! Nonlinear radial solver on a conformal background.
//!
//! The unknown is `R = r + vartheta` at cell centres. The pressure force is the exact gradient
//! of the discrete potential `sum_f rho_f^2 alpha w_f^(1+alpha) J_f^(-1/alpha)` over the
//! interior faces, and the force of the reference state `R = r` is subtracted so that zero data
//! is a fixed point of the scheme to the last bit.

use super::{check_conformal, march, Background, RadialField, Series, SolverConfig, SolverError};
use crate::ball::RadialGrid;

struct Faces {
    rho: Vec<f64>,
    w1: Vec<f64>,
}

/// Face data for faces `1..n`, stored at index `f - 1`.
fn faces(grid: &RadialGrid) -> Faces {
    let p = &grid.params;
    let rho: Vec<f64> = (1..grid.n).map(|f| grid.face(f)).collect();
    let w1 = rho.iter().map(|x| p.w_of_r2(x * x).powf(1.0 + p.alpha)).collect();
    Faces { rho, w1 }
}

/// `J` at face `f` together with its partial derivatives in `R_(f-1)` and `R_f`.
#[inline]
fn face_jacobian(left: f64, right: f64, rho: f64, dr: f64) -> (f64, f64, f64) {
    let q = 0.5 * (left + right) / rho;
    let rr = (right - left) / dr;
    let j = q * q * rr;
    (j, q * rr / rho - q * q / dr, q * rr / rho + q * q / dr)
}

/// Minimum face Jacobian and the face radius where it occurs.
pub fn min_face_jacobian(grid: &RadialGrid, theta: &[f64]) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    for f in 1..grid.n {
        let left = grid.r[f - 1] + theta[f - 1];
        let right = grid.r[f] + theta[f];
        let (j, _, _) = face_jacobian(left, right, grid.face(f), grid.dr);
        if j < best.0 {
            best = (j, grid.face(f));
        }
    }
    best
}

/// `delta R - (r^2 w^alpha)^(-1) sum_f rho_f^2 P_f dJ_f/dR` for every cell.
fn force(grid: &RadialGrid, faces: &Faces, big_r: &[f64], out: &mut [f64]) {
    let p = &grid.params;
    let n = grid.n;
    out.iter_mut().for_each(|o| *o = 0.0);
    for f in 1..n {
        let rho = faces.rho[f - 1];
        let (j, dl, dr_) = face_jacobian(big_r[f - 1], big_r[f], rho, grid.dr);
        let pf = rho * rho * faces.w1[f - 1] * j.powf(-p.gamma);
        out[f - 1] -= pf * dl;
        out[f] -= pf * dr_;
    }
    for i in 0..n {
        let m = grid.r[i] * grid.r[i] * grid.w[i].powf(p.alpha);
        out[i] = p.delta * big_r[i] + out[i] / m;
    }
}

/// Integrates the radial equation from `(theta0, v0)`; `observe` sees every output snapshot
/// and may abort the run.
pub fn solve_radial<O>(
    bg: &dyn Background,
    grid: &RadialGrid,
    theta0: &[f64],
    v0: &[f64],
    cfg: &SolverConfig,
    mut observe: O,
) -> Result<Series<RadialField>, SolverError>
where
    O: FnMut(&RadialField) -> Result<(), String>,
{
    cfg.validate()?;
    check_conformal(bg)?;
    let p = *bg.params();
    if p != grid.params {
        return Err(SolverError::Config("grid and background parameters differ".into()));
    }
    let n = grid.n;
    if n < 3 || theta0.len() != n || v0.len() != n {
        return Err(SolverError::Config(format!("radial data must have {n} >= 3 entries")));
    }
    if cfg.tau_end > bg.tau_end() + 1e-9 {
        return Err(SolverError::Config(format!("background covers tau <= {}", bg.tau_end())));
    }
    let (j0, r0) = min_face_jacobian(grid, theta0);
    if !(j0 > 0.0) {
        return Err(SolverError::Degenerate { tau: 0.0, j: j0, r: r0 });
    }

    let fc = faces(grid);
    let mut g_ref = vec![0.0; n];
    force(grid, &fc, &grid.r, &mut g_ref);
    let coeff = move |tau: f64| -> Result<(f64, f64), SolverError> {
        let f = bg.frame(tau)?;
        Ok((f.mu_tau_over_mu, f.mu.powf(3.0 - 3.0 * p.gamma)))
    };

    let rhs = |tau: f64, y: &[f64]| -> Result<Vec<f64>, SolverError> {
        let (damp, stiff) = coeff(tau)?;
        let (theta, v) = y.split_at(n);
        let big_r: Vec<f64> = grid.r.iter().zip(theta).map(|(r, t)| r + t).collect();
        for f in 1..n {
            let (j, _, _) = face_jacobian(big_r[f - 1], big_r[f], fc.rho[f - 1], grid.dr);
            if !(j > 0.0) {
                return Err(SolverError::Degenerate { tau, j, r: fc.rho[f - 1] });
            }
        }
        let mut g = vec![0.0; n];
        force(grid, &fc, &big_r, &mut g);
        let mut out = Vec::with_capacity(2 * n);
        out.extend_from_slice(v);
        out.extend((0..n).map(|i| -damp * v[i] - stiff * (g[i] - g_ref[i])));
        Ok(out)
    };
    let dt_of = |tau: f64| -> Result<f64, SolverError> {
        let (_, stiff) = coeff(tau)?;
        let c2 = stiff * p.gamma * p.w_scale() * 4.0;
        Ok(cfg.cfl * grid.dr / c2.sqrt())
    };
    let accept = |tau: f64, y: &[f64]| -> Result<(), SolverError> {
        let (j, r) = min_face_jacobian(grid, &y[..n]);
        if j > 0.0 {
            Ok(())
        } else {
            Err(SolverError::Degenerate { tau, j, r })
        }
    };

    let mut snapshots = Vec::new();
    let mut y0 = theta0.to_vec();
    y0.extend_from_slice(v0);
    let (steps, max_step_change) = march(cfg, y0, rhs, dt_of, accept, |tau, y| {
        let snap = RadialField { tau, theta: y[..n].to_vec(), v: y[n..].to_vec() };
        observe(&snap).map_err(|reason| SolverError::Aborted { tau, reason })?;
        if cfg.stores(tau) {
            snapshots.push(snap);
        }
        Ok(())
    })?;
    Ok(Series { snapshots, steps, max_step_change })
}
