//! Transport of the linearised curl `C(V) = DV Lambda - (DV Lambda)^T` along a Cartesian run.
//!
//! Linear solutions satisfy
//! `mu C(V)(tau) = mu(0) C(V)(0) + int mu [d_tau, C] V - 2 int mu C(Gamma* V)`
//! with `[d_tau, C] V = DV Lambda_tau - (DV Lambda_tau)^T`; the memory integrals are
//! accumulated with the trapezoidal rule as snapshots arrive.

use serde::{Deserialize, Serialize};

use crate::ball::lie::curl_at;
use crate::ball::{CartGrid, Side};
use crate::eulerian::Vec3;
use crate::fit::{decay_fit, DecayFit};
use crate::frame::DerivedFrame;
use crate::Mat3;

/// Relative residual above which the check is flagged as quadrature dominated.
pub const CADENCE_FLAG: f64 = 1e-2;

fn antisym(m: Mat3) -> Mat3 {
    m - m.transpose()
}

/// Sequential accumulator; feed snapshots in increasing tau.
pub struct CurlTransport<'g> {
    grid: &'g CartGrid,
    start: Option<(f64, Vec<Mat3>)>,
    integral: Vec<Mat3>,
    prev: Option<(f64, Vec<Mat3>)>,
    taus: Vec<f64>,
    residuals: Vec<f64>,
    relative: Vec<f64>,
    b_v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurlTransportReport {
    pub taus: Vec<f64>,
    /// `||C(V) - rhs||_(alpha+1)` per snapshot.
    pub residuals: Vec<f64>,
    pub relative: Vec<f64>,
    pub max_relative: f64,
    /// The cadence was too coarse for the memory integrals.
    pub cadence_flagged: bool,
    /// `B^0[V]` per snapshot.
    pub b_v: Vec<f64>,
    pub fit: Option<DecayFit>,
    /// Fit of `B^0[V] / (1 + tau^2)`, the envelope form for gamma = 5/3.
    pub envelope_fit: Option<DecayFit>,
    pub target_rate: f64,
}

impl<'g> CurlTransport<'g> {
    pub fn new(grid: &'g CartGrid) -> Self {
        Self {
            grid,
            start: None,
            integral: vec![Mat3::zeros(); grid.len()],
            prev: None,
            taus: Vec::new(),
            residuals: Vec::new(),
            relative: Vec::new(),
            b_v: Vec::new(),
        }
    }

    pub fn push(&mut self, tau: f64, v: &[Vec3], frame: &DerivedFrame) {
        let g = self.grid;
        let dv = g.jacobian(v);
        let (lam, lam_t, gs, mu) = (frame.lambda, frame.lambda_tau, frame.gamma_star, frame.mu);
        let c: Vec<Mat3> = g.exec.map(g.len(), |i| antisym(dv[i] * lam));
        let integrand: Vec<Mat3> =
            g.exec.map(g.len(), |i| (antisym(dv[i] * lam_t) - antisym(gs * dv[i] * lam) * 2.0) * mu);
        if let Some((t0, f0)) = &self.prev {
            let half = 0.5 * (tau - t0);
            for i in 0..g.len() {
                self.integral[i] += (f0[i] + integrand[i]) * half;
            }
        }
        let (mu0, c0) = self.start.get_or_insert_with(|| (mu, c.clone()));
        let rhs: Vec<Mat3> = (0..g.len()).map(|i| (c0[i] * *mu0 + self.integral[i]) / mu).collect();
        let diff: Vec<Mat3> = (0..g.len()).map(|i| c[i] - rhs[i]).collect();
        let k = g.params.alpha + 1.0;
        let res = g.weighted_norm(&diff, k, Side::Both).sqrt();
        let norm = g.weighted_norm(&c, k, Side::Both).sqrt();
        let curl: Vec<Vec3> = g.exec.map(g.len(), |i| curl_at(&dv[i], &Mat3::identity(), &lam));
        self.taus.push(tau);
        self.residuals.push(res);
        self.relative.push(if norm > 0.0 { res / norm } else { res });
        self.b_v.push(g.weighted_norm(&curl, k, Side::Both));
        self.prev = Some((tau, integrand));
    }

    /// Summary with decay fits of `B^0[V]` against `target_rate = 2 mu_0`.
    pub fn report(&self, target_rate: f64) -> CurlTransportReport {
        let max_relative = self.relative.iter().cloned().fold(0.0, f64::max);
        let skip = usize::from(self.taus.first() == Some(&0.0) && self.b_v.first() == Some(&0.0));
        let (t, b) = (&self.taus[skip.min(self.taus.len())..], &self.b_v[skip.min(self.b_v.len())..]);
        let fit = decay_fit(t, b).ok();
        let comp: Vec<f64> = t.iter().zip(b).map(|(t, b)| b / (1.0 + t * t)).collect();
        let envelope_fit = decay_fit(t, &comp).ok();
        CurlTransportReport {
            taus: self.taus.clone(),
            residuals: self.residuals.clone(),
            relative: self.relative.clone(),
            max_relative,
            cadence_flagged: max_relative > CADENCE_FLAG,
            b_v: self.b_v.clone(),
            fit,
            envelope_fit,
            target_rate,
        }
    }
}
