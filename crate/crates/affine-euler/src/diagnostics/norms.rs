//! The norm `S^N`, the vorticity functionals `B^N`, the energy `E^N` and the dissipation `D^N`.
//!
//! Composite derivatives are indexed by words: `dr^a ang[b1 b2 ..]` applies the angular
//! derivatives right to left and then `a` radial derivatives (weight `w^(a + alpha)` on the
//! `psi` side); `d[n1 n2 ..]` are Cartesian derivatives (weight `w^alpha` on the `1 - psi`
//! side).

use serde::{Deserialize, Serialize};

use super::{DiagError, MAX_ORDER};
use crate::ball::grid::{Parity, SqNorm};
use crate::ball::lie::curl_at;
use crate::ball::{CartGrid, FlowMapDiff, FlowMapError, RadialGrid, Side};
use crate::eulerian::Vec3;
use crate::frame::DerivedFrame;
use crate::Mat3;

/// How `nabla_eta` is evaluated: frozen at `eta = y` (linearised) or along the flow map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Identity,
    FlowMap,
}

/// `int phi w^k |f|^2 dy` on the Cartesian grid.
pub fn weighted_norm<T: SqNorm + Sync>(grid: &CartGrid, f: &[T], k: f64, side: Side) -> f64 {
    grid.weighted_norm(f, k, side)
}

/// Squared weighted norms of one composite derivative and its energy contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    pub label: String,
    pub side: Side,
    /// Number of radial derivatives; the weight power is `a + alpha`.
    pub a: usize,
    pub v: f64,
    pub theta: f64,
    pub grad: f64,
    pub div: f64,
    pub curl_v: f64,
    pub curl_theta: f64,
    pub energy: f64,
    /// `int phi <Lambda^-1 V, V> w^(a + alpha)` without the dissipation prefactor.
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub tau: f64,
    pub order: usize,
    pub chart: Chart,
    pub entries: Vec<NormEntry>,
    pub s: f64,
    pub b_v: f64,
    pub b_theta: f64,
    pub e: f64,
    pub d: f64,
    /// The order `2 ceil(alpha) + 12` required by the stability theorem.
    pub theorem_order: usize,
    pub theorem_order_reached: bool,
}

struct Composite {
    label: String,
    side: Side,
    a: usize,
    theta: Vec<Vec3>,
    v: Vec<Vec3>,
}

fn words(len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w| (0..3).map(move |i| [w.clone(), vec![i]].concat())).collect();
    }
    out
}

fn word_label(w: &[usize]) -> String {
    w.iter().map(|i| (b'1' + *i as u8) as char).collect()
}

fn composites(grid: &CartGrid, theta: &[Vec3], v: &[Vec3], n: usize) -> Vec<Composite> {
    let ang = |f: &[Vec3], i: usize| grid.angular(&grid.partials(f), i);
    let dr = |f: &[Vec3]| grid.radial_derivative(&grid.partials(f));
    let mut out = Vec::new();
    for len in 0..=n {
        for word in words(len) {
            let (mut t, mut u) = (theta.to_vec(), v.to_vec());
            for &i in word.iter().rev() {
                t = ang(&t, i);
                u = ang(&u, i);
            }
            for a in 0..=(n - len) {
                if a > 0 {
                    t = dr(&t);
                    u = dr(&u);
                }
                let label = format!("dr^{a} ang[{}]", word_label(&word));
                out.push(Composite { label, side: Side::Psi, a, theta: t.clone(), v: u.clone() });
            }
        }
    }
    for len in 0..=n {
        for word in words(len) {
            let (mut t, mut u) = (theta.to_vec(), v.to_vec());
            for &i in word.iter().rev() {
                t = grid.partial(&t, i);
                u = grid.partial(&u, i);
            }
            let label = format!("d[{}]", word_label(&word));
            out.push(Composite { label, side: Side::OneMinusPsi, a: 0, theta: t, v: u });
        }
    }
    out
}

/// `sum_ij (d_i / d_j) ((P G P^T)^j_i)^2`, rows of `G` being components.
pub fn eigen_term(g: &Mat3, frame: &DerivedFrame) -> f64 {
    let m = frame.p * g * frame.p.transpose();
    let mut s = 0.0;
    for j in 0..3 {
        for i in 0..3 {
            s += frame.d[i] / frame.d[j] * m[(j, i)] * m[(j, i)];
        }
    }
    s
}

fn theorem_order(alpha: f64) -> usize {
    2 * alpha.ceil() as usize + 12
}

fn finish(tau: f64, order: usize, chart: Chart, entries: Vec<NormEntry>, frame: &DerivedFrame, gamma: f64, alpha: f64) -> NormReport {
    let mu_pow = frame.mu.powf(3.0 * gamma - 3.0);
    let s = entries.iter().map(|e| mu_pow * e.v + e.theta + e.grad + e.div).sum();
    let b_v = entries.iter().map(|e| e.curl_v).sum();
    let b_theta = entries.iter().map(|e| e.curl_theta).sum();
    let e = entries.iter().map(|e| e.energy).sum();
    let pref = (5.0 - 3.0 * gamma) / 2.0 * mu_pow * frame.mu_tau_over_mu;
    let d = pref * entries.iter().map(|e| e.dissipation).sum::<f64>();
    let theorem_order = theorem_order(alpha);
    NormReport { tau, order, chart, entries, s, b_v, b_theta, e, d, theorem_order, theorem_order_reached: order >= theorem_order }
}

/// Every functional of `(theta, V)` on the Cartesian grid up to composite order `n`.
pub fn s_norm(
    grid: &CartGrid,
    tau: f64,
    theta: &[Vec3],
    v: &[Vec3],
    frame: &DerivedFrame,
    n: usize,
    chart: Chart,
) -> Result<NormReport, DiagError> {
    if n > MAX_ORDER {
        return Err(DiagError::OrderTooHigh(n));
    }
    for f in [theta, v] {
        if f.len() != grid.len() {
            return Err(DiagError::Length { got: f.len(), expected: grid.len() });
        }
    }
    let p = grid.params;
    let flow = match chart {
        Chart::Identity => FlowMapDiff::identity(&grid.active),
        Chart::FlowMap => FlowMapDiff::new(grid, theta)?,
    };
    let lambda_inv = frame.lambda.try_inverse().ok_or_else(|| DiagError::Invalid("singular Lambda".into()))?;
    let mu_pow = frame.mu.powf(3.0 * p.gamma - 3.0);
    let exec = grid.exec;
    let mut entries = Vec::new();
    for c in composites(grid, theta, v, n) {
        let k = c.a as f64 + p.alpha;
        let dt = grid.jacobian(&c.theta);
        let dv = grid.jacobian(&c.v);
        let grad = flow.nabla_eta(&dt);
        let div: Vec<f64> = grad.iter().map(|g| g.trace()).collect();
        let curl_v: Vec<Vec3> = exec.map(grid.len(), |i| curl_at(&dv[i], &flow.inv_jac[i], &frame.lambda));
        let curl_t: Vec<Vec3> = exec.map(grid.len(), |i| curl_at(&dt[i], &flow.inv_jac[i], &frame.lambda));
        let lv: Vec<f64> = exec.map(grid.len(), |i| c.v[i].dot(&(lambda_inv * c.v[i])));
        let lt: Vec<f64> = exec.map(grid.len(), |i| c.theta[i].dot(&(lambda_inv * c.theta[i])));
        let kinetic: Vec<f64> = (0..grid.len()).map(|i| 0.5 * (mu_pow * lv[i] + p.delta * lt[i])).collect();
        let potential: Vec<f64> = exec.map(grid.len(), |i| {
            let jf = flow.j[i].powf(-1.0 / p.alpha);
            0.5 * jf * (eigen_term(&grad[i], frame) + div[i] * div[i] / p.alpha)
        });
        let (kv, kg) = match c.side {
            Side::Psi => (k, k + 1.0),
            _ => (p.alpha, p.alpha + 1.0),
        };
        entries.push(NormEntry {
            label: c.label,
            side: c.side,
            a: c.a,
            v: grid.weighted_norm(&c.v, kv, c.side),
            theta: grid.weighted_norm(&c.theta, kv, c.side),
            grad: grid.weighted_norm(&grad, kg, c.side),
            div: grid.weighted_norm(&div, kg, c.side),
            curl_v: grid.weighted_norm(&curl_v, kg, c.side),
            curl_theta: grid.weighted_norm(&curl_t, kg, c.side),
            energy: grid.integrate(&kinetic, kv, c.side) + grid.integrate(&potential, kg, c.side),
            dissipation: grid.integrate(&lv, kv, c.side),
        });
    }
    Ok(finish(tau, n, chart, entries, frame, p.gamma, p.alpha))
}

/// `(E^N, D^N)` on the Cartesian grid.
pub fn energy_and_dissipation(
    grid: &CartGrid,
    tau: f64,
    theta: &[Vec3],
    v: &[Vec3],
    frame: &DerivedFrame,
    n: usize,
    chart: Chart,
) -> Result<(f64, f64), DiagError> {
    let r = s_norm(grid, tau, theta, v, frame, n, chart)?;
    Ok((r.e, r.d))
}

/// Order-zero functionals of the radial field `vartheta(r) y / r` with velocity `v(r) y / r`
/// on a conformal background, where `Lambda = Id` and every curl vanishes.
pub fn radial_report(
    grid: &RadialGrid,
    tau: f64,
    theta: &[f64],
    v: &[f64],
    frame: &DerivedFrame,
    n: usize,
    chart: Chart,
) -> Result<NormReport, DiagError> {
    if n != 0 {
        return Err(DiagError::RadialOrder(n));
    }
    for f in [theta, v] {
        if f.len() != grid.n {
            return Err(DiagError::Length { got: f.len(), expected: grid.n });
        }
    }
    let p = grid.params;
    let dth = grid.d_r(theta, Parity::Odd);
    let mut q1 = vec![0.0; grid.n];
    let mut q2 = vec![0.0; grid.n];
    let mut jac = vec![1.0; grid.n];
    for i in 0..grid.n {
        let r = grid.r[i];
        match chart {
            Chart::Identity => {
                q1[i] = theta[i] / r;
                q2[i] = dth[i];
            }
            Chart::FlowMap => {
                let big_r = r + theta[i];
                let big_rr = 1.0 + dth[i];
                jac[i] = (big_r / r).powi(2) * big_rr;
                if !(jac[i] > 0.0) {
                    return Err(FlowMapError::NonPositiveJacobian { index: i, j: jac[i] }.into());
                }
                q1[i] = theta[i] / big_r;
                q2[i] = dth[i] / big_rr;
            }
        }
    }
    let grad2: Vec<f64> = (0..grid.n).map(|i| 2.0 * q1[i] * q1[i] + q2[i] * q2[i]).collect();
    let div: Vec<f64> = (0..grid.n).map(|i| 2.0 * q1[i] + q2[i]).collect();
    let mu_pow = frame.mu.powf(3.0 * p.gamma - 3.0);
    let kinetic: Vec<f64> =
        (0..grid.n).map(|i| 0.5 * (mu_pow * v[i] * v[i] + p.delta * theta[i] * theta[i])).collect();
    let potential: Vec<f64> = (0..grid.n)
        .map(|i| 0.5 * jac[i].powf(-1.0 / p.alpha) * (grad2[i] + div[i] * div[i] / p.alpha))
        .collect();
    let (k, k1) = (p.alpha, p.alpha + 1.0);
    let entries = [Side::Psi, Side::OneMinusPsi]
        .into_iter()
        .map(|side| NormEntry {
            label: if side == Side::Psi { "dr^0 ang[]".into() } else { "d[]".into() },
            side,
            a: 0,
            v: grid.weighted_norm(v, k, side),
            theta: grid.weighted_norm(theta, k, side),
            grad: grid.integrate(&grad2, k1, side),
            div: grid.weighted_norm(&div, k1, side),
            curl_v: 0.0,
            curl_theta: 0.0,
            energy: grid.integrate(&kinetic, k, side) + grid.integrate(&potential, k1, side),
            dissipation: grid.weighted_norm(v, k, side),
        })
        .collect();
    Ok(finish(tau, 0, chart, entries, frame, p.gamma, p.alpha))
}

/// Aborts a run once the energy exceeds `factor` times its first recorded value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGuard {
    pub factor: f64,
    initial: Option<f64>,
}

impl EnergyGuard {
    pub fn new(factor: f64) -> Self {
        Self { factor, initial: None }
    }

    pub fn check(&mut self, tau: f64, energy: f64) -> Result<(), String> {
        let e0 = *self.initial.get_or_insert(energy);
        if !energy.is_finite() || energy > self.factor * e0 && energy > 0.0 {
            return Err(format!("energy {energy:e} at tau = {tau} exceeds {} x initial {e0:e}", self.factor));
        }
        Ok(())
    }
}

impl Default for EnergyGuard {
    fn default() -> Self {
        Self::new(10.0)
    }
}

/// `(min, max, max / min)` of `E / S` over pairs with `S > 0`.
pub fn norm_energy_interval(pairs: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let ratios: Vec<f64> = pairs.iter().filter(|(_, s)| *s > 0.0).map(|(e, s)| e / s).collect();
    if ratios.is_empty() {
        return None;
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    Some((lo, hi, hi / lo))
}
