//! Linearised Cartesian solver on a general affine background.
//!
//! The pressure term `w^(-alpha) d_k(w^(1+alpha) G^k)` with `G^k = Lambda X^k` and
//! `X^k_j = theta^k,_j + (1/alpha) delta_kj div theta` is expanded as
//! `w d_k G^k + (1 + alpha) (d_k w) G^k`, with `w` and `d_k w` taken analytically. `G^k` is
//! evaluated on the faces normal to `k` (compact difference for `j = k`, neighbour averages of
//! cell gradients otherwise). Cells missing a neighbour along `k` use the cell-centred `G^k`
//! with one-sided differences. Unknowns live on the active cells only.

use super::{march, Background, CartField, Series, SolverConfig, SolverError};
use crate::ball::CartGrid;
use crate::eulerian::Vec3;
use crate::exec::Exec;
use crate::params::GammaParams;
use crate::Mat3;

fn vec_at(y: &[f64], i: usize) -> Vec3 {
    Vec3::new(y[3 * i], y[3 * i + 1], y[3 * i + 2])
}

fn unflatten(y: &[f64]) -> Vec<Vec3> {
    (0..y.len() / 3).map(|i| vec_at(y, i)).collect()
}

fn flatten(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|x| [x.x, x.y, x.z]).collect()
}

/// `X^k` from a gradient `D(a, s) = d_s theta^a`.
fn flux_vector(d: &Mat3, k: usize, inv_alpha: f64) -> Vec3 {
    let mut x = Vec3::new(d[(k, 0)], d[(k, 1)], d[(k, 2)]);
    x[k] += inv_alpha * d.trace();
    x
}

const NONE: u32 = u32::MAX;

/// Active cells of a [`CartGrid`] in compact numbering with neighbour tables.
pub struct ActiveStencil {
    pub cells: Vec<usize>,
    /// `nb[m][axis]` holds the compact indices at offsets `-2, -1, +1, +2`.
    nb: Vec<[[u32; 4]; 3]>,
    w: Vec<f64>,
    dw: Vec<Vec3>,
    h: f64,
}

impl ActiveStencil {
    pub fn new(grid: &CartGrid) -> Self {
        let cells = grid.active_list.clone();
        let mut compact = vec![NONE; grid.len()];
        for (m, &i) in cells.iter().enumerate() {
            compact[i] = m as u32;
        }
        let nb = cells
            .iter()
            .map(|&i| {
                [0, 1, 2].map(|axis| {
                    [-2, -1, 1, 2].map(|s| grid.neighbour(i, axis, s).map_or(NONE, |j| compact[j]))
                })
            })
            .collect();
        let ws = grid.params.w_scale();
        let w = cells.iter().map(|&i| grid.w[i]).collect();
        let dw = cells.iter().map(|&i| grid.centres[i] * (-2.0 * ws)).collect();
        Self { cells, nb, w, dw, h: grid.h }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Derivative along `axis` with the same stencils as [`CartGrid::partial`].
    fn partial_at<F: Fn(usize) -> Vec3>(&self, f: F, m: usize, axis: usize) -> Vec3 {
        let h = self.h;
        let [mm, mi, pi, pp] = self.nb[m][axis].map(|x| (x != NONE).then_some(x as usize));
        match (mi, pi) {
            (Some(a), Some(b)) => (f(b) - f(a)) * (0.5 / h),
            (None, Some(b)) => match pp {
                Some(c) => (f(b) * 4.0 - f(m) * 3.0 - f(c)) * (0.5 / h),
                None => (f(b) - f(m)) / h,
            },
            (Some(a), None) => match mm {
                Some(c) => (f(m) * 3.0 - f(a) * 4.0 + f(c)) * (0.5 / h),
                None => (f(m) - f(a)) / h,
            },
            (None, None) => Vec3::zeros(),
        }
    }

    /// `D(a, s) = d_s theta^a` on the active cells.
    pub fn jacobian(&self, theta: &[Vec3], exec: Exec) -> Vec<Mat3> {
        exec.map(self.len(), |m| {
            let c = [0, 1, 2].map(|s| self.partial_at(|j| theta[j], m, s));
            Mat3::from_columns(&c)
        })
    }

    /// `w^(-alpha) d_k(w^(1+alpha) Lambda X^k)` on the active cells.
    pub fn pressure(&self, params: &GammaParams, lambda: &Mat3, theta: &[Vec3], exec: Exec) -> Vec<Vec3> {
        let inv_alpha = 1.0 / params.alpha;
        let h = self.h;
        let d = self.jacobian(theta, exec);
        let g_cell: Vec<[Vec3; 3]> =
            exec.map(self.len(), |m| [0, 1, 2].map(|k| lambda * flux_vector(&d[m], k, inv_alpha)));
        let face = |c: usize, nb: usize, k: usize, sign: f64| -> Vec3 {
            let mut x = Vec3::zeros();
            let dkk = sign * (theta[nb][k] - theta[c][k]) / h;
            for j in 0..3 {
                x[j] = if j == k { dkk } else { 0.5 * (d[c][(k, j)] + d[nb][(k, j)]) };
            }
            let mut div = dkk;
            for l in (0..3).filter(|&l| l != k) {
                div += 0.5 * (d[c][(l, l)] + d[nb][(l, l)]);
            }
            x[k] += inv_alpha * div;
            lambda * x
        };
        exec.map(self.len(), |m| {
            let w = self.w[m];
            let mut acc = Vec3::zeros();
            for k in 0..3 {
                let dw = (1.0 + params.alpha) * self.dw[m][k];
                let [_, lo, hi, _] = self.nb[m][k];
                if lo != NONE && hi != NONE {
                    let gp = face(m, hi as usize, k, 1.0);
                    let gm = face(m, lo as usize, k, -1.0);
                    acc += (gp - gm) * (w / h) + (gp + gm) * (0.5 * dw);
                } else {
                    let dg = self.partial_at(|j| g_cell[j][k], m, k);
                    acc += dg * w + g_cell[m][k] * dw;
                }
            }
            acc
        })
    }

    pub fn gather(&self, full: &[Vec3]) -> Vec<Vec3> {
        self.cells.iter().map(|&i| full[i]).collect()
    }

    pub fn scatter(&self, compact: &[Vec3], n: usize) -> Vec<Vec3> {
        let mut out = vec![Vec3::zeros(); n];
        for (m, &i) in self.cells.iter().enumerate() {
            out[i] = compact[m];
        }
        out
    }
}

/// `w^(-alpha) d_k(w^(1+alpha) Lambda X^k)` on every cell; inactive cells hold zero.
pub fn pressure_term(grid: &CartGrid, lambda: &Mat3, theta: &[Vec3]) -> Vec<Vec3> {
    let st = ActiveStencil::new(grid);
    let p = st.pressure(&grid.params, lambda, &st.gather(theta), grid.exec);
    st.scatter(&p, grid.len())
}

/// Integrates the linearised equation from `(theta0, v0)` given on every cell of `grid`;
/// `observe` sees every output snapshot and may abort the run.
pub fn solve_linear3d<O>(
    bg: &dyn Background,
    grid: &CartGrid,
    theta0: &[Vec3],
    v0: &[Vec3],
    cfg: &SolverConfig,
    mut observe: O,
) -> Result<Series<CartField>, SolverError>
where
    O: FnMut(&CartField) -> Result<(), String>,
{
    cfg.validate()?;
    let p = *bg.params();
    if p != grid.params {
        return Err(SolverError::Config("grid and background parameters differ".into()));
    }
    let n = grid.len();
    if theta0.len() != n || v0.len() != n {
        return Err(SolverError::Config(format!("Cartesian data must have {n} entries")));
    }
    if cfg.tau_end > bg.tau_end() + 1e-9 {
        return Err(SolverError::Config(format!("background covers tau <= {}", bg.tau_end())));
    }
    let st = ActiveStencil::new(grid);
    let na = st.len();
    let exec = grid.exec;

    let rhs = |tau: f64, y: &[f64]| -> Result<Vec<f64>, SolverError> {
        let f = bg.frame(tau)?;
        let stiff = f.mu.powf(3.0 - 3.0 * p.gamma);
        let (theta_flat, v_flat) = y.split_at(3 * na);
        let theta = unflatten(theta_flat);
        let press = st.pressure(&p, &f.lambda, &theta, exec);
        let damp = Mat3::identity() * f.mu_tau_over_mu + f.gamma_star * 2.0;
        let acc = exec.map(na, |m| {
            let v = vec_at(v_flat, m);
            -damp * v - (f.lambda * theta[m] * p.delta - press[m]) * stiff
        });
        let mut out = Vec::with_capacity(6 * na);
        out.extend_from_slice(v_flat);
        out.extend(acc.iter().flat_map(|x| [x.x, x.y, x.z]));
        Ok(out)
    };
    let dt_of = |tau: f64| -> Result<f64, SolverError> {
        let f = bg.frame(tau)?;
        let c2 = f.mu.powf(3.0 - 3.0 * p.gamma) * f.d[0] * (1.0 + 1.0 / p.alpha) * p.w_scale();
        Ok(cfg.cfl * grid.h / c2.sqrt())
    };

    let mut snapshots = Vec::new();
    let mut y0 = flatten(&st.gather(theta0));
    y0.extend(flatten(&st.gather(v0)));
    let (steps, max_step_change) = march(cfg, y0, rhs, dt_of, |_, _| Ok(()), |tau, y| {
        let snap = CartField {
            tau,
            theta: st.scatter(&unflatten(&y[..3 * na]), n),
            v: st.scatter(&unflatten(&y[3 * na..]), n),
        };
        observe(&snap).map_err(|reason| SolverError::Aborted { tau, reason })?;
        if cfg.stores(tau) {
            snapshots.push(snap);
        }
        Ok(())
    })?;
    Ok(Series { snapshots, steps, max_step_change })
}
