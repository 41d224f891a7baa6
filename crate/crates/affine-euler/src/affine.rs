//! Affine motions: the matrix ODE `A'' = delta det(A)^(1-gamma) A^(-T)` with the clocks s and tau.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{derived_frame, DerivedFrame, FrameError};
use crate::ode::{dop853, OdeError, OdeOptions};
use crate::params::GammaParams;

pub type Mat3 = Matrix3<f64>;

const STATE_DIM: usize = 20;

#[derive(Debug, Error)]
pub enum AffineError {
    #[error("initial matrix must have positive determinant (got {0})")]
    NonPositiveDeterminant(f64),
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("t_end must be positive")]
    BadHorizon,
    #[error("integration failed: {0}")]
    Integrator(#[from] OdeError),
    #[error("query {0} outside the trajectory range")]
    OutOfRange(f64),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// One instant of an affine motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineState {
    pub t: f64,
    pub s: f64,
    pub tau: f64,
    pub a: Mat3,
    pub a_dot: Mat3,
}

impl AffineState {
    pub fn det(&self) -> f64 {
        self.a.determinant()
    }

    pub fn mu(&self) -> f64 {
        self.det().cbrt()
    }

    fn to_vec(self) -> [f64; STATE_DIM] {
        let mut y = [0.0; STATE_DIM];
        pack(&self.a, &self.a_dot, self.s, self.tau, &mut y);
        y
    }

    fn from_vec(t: f64, y: &[f64; STATE_DIM]) -> Self {
        let (a, a_dot) = unpack(y);
        Self { t, s: y[18], tau: y[19], a, a_dot }
    }
}

fn pack(a: &Mat3, a_dot: &Mat3, s: f64, tau: f64, y: &mut [f64; STATE_DIM]) {
    for i in 0..3 {
        for j in 0..3 {
            y[3 * i + j] = a[(i, j)];
            y[9 + 3 * i + j] = a_dot[(i, j)];
        }
    }
    y[18] = s;
    y[19] = tau;
}

fn unpack(y: &[f64; STATE_DIM]) -> (Mat3, Mat3) {
    let a = Mat3::from_row_slice(&y[0..9]);
    let a_dot = Mat3::from_row_slice(&y[9..18]);
    (a, a_dot)
}

/// Right-hand side `delta det(A)^(1-gamma) A^(-T)`; `None` when A is singular.
pub fn affine_acceleration(params: &GammaParams, a: &Mat3) -> Option<Mat3> {
    let det = a.determinant();
    if !(det > 0.0) {
        return None;
    }
    let inv = a.try_inverse()?;
    Some(inv.transpose() * (params.delta * det.powf(1.0 - params.gamma)))
}

/// Conserved ODE energy `|A'|_HS^2 / 2 + delta/(gamma-1) det(A)^(1-gamma)`.
pub fn ode_energy(params: &GammaParams, a: &Mat3, a_dot: &Mat3) -> f64 {
    0.5 * a_dot.norm_squared() + params.delta / (params.gamma - 1.0) * a.determinant().powf(1.0 - params.gamma)
}

fn rhs(params: &GammaParams, y: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
    let (a, a_dot) = unpack(y);
    let det = a.determinant();
    let mut out = [f64::NAN; STATE_DIM];
    let Some(acc) = affine_acceleration(params, &a) else {
        return out;
    };
    pack(&a_dot, &acc, 0.0, 0.0, &mut out);
    out[18] = det.powf(-(3.0 * params.gamma - 1.0) / 6.0);
    out[19] = 1.0 / det.cbrt();
    out
}

/// Second t-derivative of the state, used for quintic Hermite interpolation.
fn rhs2(params: &GammaParams, y: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
    let (a, a_dot) = unpack(y);
    let det = a.determinant();
    let mut out = [f64::NAN; STATE_DIM];
    let (Some(acc), Some(inv)) = (affine_acceleration(params, &a), a.try_inverse()) else {
        return out;
    };
    let tr = (inv * a_dot).trace();
    let inv_t = inv.transpose();
    let jerk = (inv_t * ((1.0 - params.gamma) * tr) - inv_t * a_dot.transpose() * inv_t)
        * (params.delta * det.powf(1.0 - params.gamma));
    pack(&acc, &jerk, 0.0, 0.0, &mut out);
    let k = (3.0 * params.gamma - 1.0) / 6.0;
    out[18] = -k * det.powf(-k) * tr;
    out[19] = -tr / (3.0 * det.cbrt());
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Source {
    Sampled,
    IsotropicClosedForm,
}

/// A sampled affine trajectory with quintic Hermite interpolation in t or tau.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineTrajectory {
    params: GammaParams,
    samples: Vec<AffineState>,
    source: Source,
}

/// Integrates the affine ODE from `(A_init, Adot_init)` at t = 0 up to `t_end`.
pub fn integrate_affine(
    params: &GammaParams,
    a_init: &Mat3,
    adot_init: &Mat3,
    t_end: f64,
    tol: f64,
) -> Result<AffineTrajectory, AffineError> {
    let det = a_init.determinant();
    if !(det > 0.0) {
        return Err(AffineError::NonPositiveDeterminant(det));
    }
    if !(tol > 0.0) {
        return Err(AffineError::BadTolerance);
    }
    if !(t_end > 0.0) {
        return Err(AffineError::BadHorizon);
    }
    let init = AffineState { t: 0.0, s: 0.0, tau: 0.0, a: *a_init, a_dot: *adot_init };
    let mut samples = Vec::new();
    let p = *params;
    dop853(
        |_, y| rhs(&p, y),
        0.0,
        init.to_vec(),
        t_end,
        &OdeOptions::with_tol(tol),
        |y| {
            let (a, _) = unpack(y);
            a.determinant() > 0.0
        },
        |t, y| samples.push(AffineState::from_vec(t, y)),
    )?;
    Ok(AffineTrajectory { params: *params, samples, source: Source::Sampled })
}

/// Isotropic background `a(t) Id` with a(0) = 1, a'(0) = 0.
///
/// Uses the closed form `a = sqrt(1 + t^2)` when gamma = 5/3 and delta = 1, and a scalar
/// ODE solve otherwise.
pub fn conformal_background(params: &GammaParams, t_end: f64, tol: f64) -> Result<AffineTrajectory, AffineError> {
    if !(t_end > 0.0) {
        return Err(AffineError::BadHorizon);
    }
    if is_closed_form(params) {
        let tau_end = t_end.asinh();
        let n = ((tau_end / 0.01).ceil() as usize).max(16);
        let samples = (0..=n)
            .map(|i| isotropic_closed_form(tau_end * i as f64 / n as f64))
            .collect();
        return Ok(AffineTrajectory { params: *params, samples, source: Source::IsotropicClosedForm });
    }
    if !(tol > 0.0) {
        return Err(AffineError::BadTolerance);
    }
    let p = *params;
    let mut samples = Vec::new();
    dop853(
        |_, y: &[f64; 4]| {
            let a = y[0];
            let det = a * a * a;
            [
                y[1],
                p.delta * a.powf(2.0 - 3.0 * p.gamma),
                det.powf(-(3.0 * p.gamma - 1.0) / 6.0),
                1.0 / a,
            ]
        },
        0.0,
        [1.0, 0.0, 0.0, 0.0],
        t_end,
        &OdeOptions::with_tol(tol),
        |y| y[0] > 0.0,
        |t, y| {
            samples.push(AffineState {
                t,
                s: y[2],
                tau: y[3],
                a: Mat3::identity() * y[0],
                a_dot: Mat3::identity() * y[1],
            })
        },
    )?;
    Ok(AffineTrajectory { params: *params, samples, source: Source::Sampled })
}

fn is_closed_form(params: &GammaParams) -> bool {
    (params.gamma - 5.0 / 3.0).abs() < 1e-15 && params.delta == 1.0
}

/// Scalar energy `3 a'^2 / 2 + delta/(gamma-1) a^(3(1-gamma))` of the isotropic motion.
pub fn scalar_energy(params: &GammaParams, a: f64, a_dot: f64) -> f64 {
    1.5 * a_dot * a_dot + params.delta / (params.gamma - 1.0) * a.powf(3.0 * (1.0 - params.gamma))
}

fn isotropic_closed_form(tau: f64) -> AffineState {
    let t = tau.sinh();
    let a = tau.cosh();
    AffineState { t, s: t.atan(), tau, a: Mat3::identity() * a, a_dot: Mat3::identity() * (t / a) }
}

fn isotropic_closed_form_at_t(t: f64) -> AffineState {
    let a = (1.0 + t * t).sqrt();
    AffineState { t, s: t.atan(), tau: t.asinh(), a: Mat3::identity() * a, a_dot: Mat3::identity() * (t / a) }
}

#[derive(Clone, Copy)]
enum Knot {
    T,
    Tau,
}

impl AffineTrajectory {
    pub fn params(&self) -> &GammaParams {
        &self.params
    }

    pub fn samples(&self) -> &[AffineState] {
        &self.samples
    }

    pub fn first(&self) -> &AffineState {
        &self.samples[0]
    }

    pub fn last(&self) -> &AffineState {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn t_end(&self) -> f64 {
        self.last().t
    }

    pub fn tau_end(&self) -> f64 {
        self.last().tau
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.source, Source::IsotropicClosedForm)
    }

    /// State at physical time `t`.
    pub fn state_at_t(&self, t: f64) -> Result<AffineState, AffineError> {
        if matches!(self.source, Source::IsotropicClosedForm) {
            if t < 0.0 || t > self.t_end() * (1.0 + 1e-12) {
                return Err(AffineError::OutOfRange(t));
            }
            return Ok(isotropic_closed_form_at_t(t));
        }
        self.interpolate(t, Knot::T)
    }

    /// State at logarithmic time `tau`.
    pub fn state_at_tau(&self, tau: f64) -> Result<AffineState, AffineError> {
        if matches!(self.source, Source::IsotropicClosedForm) {
            if tau < 0.0 || tau > self.tau_end() * (1.0 + 1e-12) {
                return Err(AffineError::OutOfRange(tau));
            }
            return Ok(isotropic_closed_form(tau));
        }
        self.interpolate(tau, Knot::Tau)
    }

    /// Derived frame at logarithmic time `tau`.
    pub fn frame_at_tau(&self, tau: f64) -> Result<DerivedFrame, AffineError> {
        let st = self.state_at_tau(tau)?;
        Ok(derived_frame(&self.params, &st.a, &st.a_dot)?)
    }

    fn interpolate(&self, x: f64, knot: Knot) -> Result<AffineState, AffineError> {
        let key = |s: &AffineState| match knot {
            Knot::T => s.t,
            Knot::Tau => s.tau,
        };
        let n = self.samples.len();
        let x0 = key(&self.samples[0]);
        let x1 = key(&self.samples[n - 1]);
        let slack = 1e-12 * x1.abs().max(1.0);
        if !(x >= x0 - slack && x <= x1 + slack) {
            return Err(AffineError::OutOfRange(x));
        }
        if n == 1 {
            return Ok(self.samples[0]);
        }
        let x = x.clamp(x0, x1);
        let idx = self.samples.partition_point(|s| key(s) <= x).clamp(1, n - 1);
        let (sa, sb) = (&self.samples[idx - 1], &self.samples[idx]);
        let (xa, xb) = (key(sa), key(sb));
        let h = xb - xa;
        if h <= 0.0 {
            return Ok(*sa);
        }
        let ya = sa.to_vec();
        let yb = sb.to_vec();
        let (mut da, mut db) = (rhs(&self.params, &ya), rhs(&self.params, &yb));
        let (mut ca, mut cb) = (rhs2(&self.params, &ya), rhs2(&self.params, &yb));
        // t as a function of the knot variable: value, first and second derivative
        let mut tk = [(sa.t, 1.0, 0.0), (sb.t, 1.0, 0.0)];
        if let Knot::Tau = knot {
            let [tk0, tk1] = &mut tk;
            for (s, d, c, tk) in [(sa, &mut da, &mut ca, tk0), (sb, &mut db, &mut cb, tk1)] {
                let mu = s.mu();
                let third_tr = (s.a.try_inverse().unwrap_or_else(Mat3::zeros) * s.a_dot).trace() / 3.0;
                for i in 0..STATE_DIM {
                    c[i] = mu * mu * (third_tr * d[i] + c[i]);
                    d[i] *= mu;
                }
                *tk = (s.t, mu, mu * mu * third_tr);
            }
        }
        let u = (x - xa) / h;
        let (u2, u3) = (u * u, u * u * u);
        let (u4, u5) = (u3 * u, u3 * u2);
        let w = [
            1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5,
            (u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5) * h,
            (0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5) * h * h,
            (0.5 * u3 - u4 + 0.5 * u5) * h * h,
            (-4.0 * u3 + 7.0 * u4 - 3.0 * u5) * h,
            10.0 * u3 - 15.0 * u4 + 6.0 * u5,
        ];
        let mut y = [0.0; STATE_DIM];
        for i in 0..STATE_DIM {
            y[i] = w[0] * ya[i] + w[1] * da[i] + w[2] * ca[i] + w[3] * cb[i] + w[4] * db[i] + w[5] * yb[i];
        }
        let mut st = AffineState::from_vec(0.0, &y);
        match knot {
            Knot::T => st.t = x,
            Knot::Tau => {
                st.tau = x;
                st.t = w[0] * tk[0].0 + w[1] * tk[0].1 + w[2] * tk[0].2 + w[3] * tk[1].2 + w[4] * tk[1].1 + w[5] * tk[1].0;
            }
        }
        Ok(st)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_traj(t_end: f64) -> AffineTrajectory {
        integrate_affine(&GammaParams::default(), &Mat3::identity(), &Mat3::zeros(), t_end, 1e-10).unwrap()
    }

    #[test]
    fn isotropic_closed_form_is_reproduced() {
        let tr = default_traj(10.0);
        let last = tr.last();
        let exact = 101f64.sqrt();
        assert!((last.a[(0, 0)] - exact).abs() <= 1e-8 * exact);
        assert!(last.a[(0, 1)].abs() < 1e-14);
        assert!((last.tau - 10f64.asinh()).abs() < 1e-9);
        assert!((last.s - 10f64.atan()).abs() < 1e-9);
    }

    #[test]
    fn small_time_series() {
        let tr = default_traj(0.01);
        let st = tr.state_at_t(0.01).unwrap();
        let series = 1.0 + 0.5 * 0.01f64.powi(2);
        assert!((st.a[(1, 1)] - series).abs() < 1e-8);
    }

    #[test]
    fn energy_at_rest_is_three_halves() {
        assert!((ode_energy(&GammaParams::default(), &Mat3::identity(), &Mat3::zeros()) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn interpolation_matches_closed_form() {
        let tr = default_traj(50.0);
        for &t in &[0.3, 2.7, 11.1, 40.0] {
            let st = tr.state_at_t(t).unwrap();
            assert!((st.a[(2, 2)] - (1.0 + t * t).sqrt()).abs() < 1e-8 * (1.0 + t));
        }
        for &tau in &[0.5, 1.7, 3.9] {
            let st = tr.state_at_tau(tau).unwrap();
            assert!((st.a[(0, 0)] - tau.cosh()).abs() < 1e-8 * tau.cosh());
            assert!((st.t - tau.sinh()).abs() < 1e-8 * tau.cosh());
        }
    }

    #[test]
    fn rejects_singular_initial_data() {
        let r = integrate_affine(&GammaParams::default(), &Mat3::zeros(), &Mat3::zeros(), 1.0, 1e-8);
        assert!(matches!(r, Err(AffineError::NonPositiveDeterminant(_))));
    }

    #[test]
    fn conformal_background_scalar_energy() {
        let p = GammaParams::new(1.4, 1.0).unwrap();
        let tr = conformal_background(&p, 1e3, 1e-11).unwrap();
        let e0 = scalar_energy(&p, 1.0, 0.0);
        let mut prev = 1.0;
        for s in tr.samples() {
            let a = s.a[(0, 0)];
            let e = scalar_energy(&p, a, s.a_dot[(0, 0)]);
            assert!((e - e0).abs() <= 1e-8 * e0);
            assert!(a >= prev);
            prev = a;
        }
    }

    #[test]
    fn closed_form_background() {
        let tr = conformal_background(&GammaParams::default(), 100.0, 1e-10).unwrap();
        assert!(tr.is_closed_form());
        let st = tr.state_at_t(10.0).unwrap();
        assert_eq!(st.a[(0, 0)], 101f64.sqrt());
    }
}
