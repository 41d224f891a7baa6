//! Explicit affine Eulerian solutions, the GL+(3) change of variables and grid residuals of the
//! (generalised) Euler equations.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affine::{AffineError, AffineTrajectory, Mat3};
use crate::exec::Exec;
use crate::fit::linear_fit;
use crate::params::GammaParams;
use crate::quad::gauss_legendre_on;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error)]
pub enum EulerianError {
    #[error("residual subdomain reaches the vacuum boundary: stencil point {point:?} at t = {t} has rho = 0")]
    SubdomainTouchesBoundary { t: f64, point: [f64; 3] },
    #[error("empty residual subdomain")]
    EmptySubdomain,
    #[error("matrix must have positive determinant (got {0})")]
    NonPositiveDeterminant(f64),
    #[error(transparent)]
    Affine(#[from] AffineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerianSample {
    pub x: Vec3,
    pub rho: f64,
    pub u: Vec3,
    pub in_support: bool,
}

/// `det(A)^(-1) w(A^(-1) x)^alpha`, zero outside the support ellipsoid.
pub fn affine_density(a: &Mat3, params: &GammaParams, x: &Vec3) -> f64 {
    let det = a.determinant();
    let y = a.try_inverse().expect("det A > 0") * x;
    params.w_of_r2(y.norm_squared()).powf(params.alpha) / det
}

/// `A_dot A^(-1) x`.
pub fn affine_velocity(a: &Mat3, a_dot: &Mat3, x: &Vec3) -> Vec3 {
    a_dot * (a.try_inverse().expect("det A > 0") * x)
}

pub fn affine_sample(a: &Mat3, a_dot: &Mat3, params: &GammaParams, x: &Vec3) -> EulerianSample {
    let y = a.try_inverse().expect("det A > 0") * x;
    let in_support = y.norm_squared() < 1.0;
    EulerianSample { x: *x, rho: affine_density(a, params, x), u: affine_velocity(a, a_dot, x), in_support }
}

/// Density and velocity frozen at one time.
pub trait Snapshot: Sync {
    fn rho(&self, x: &Vec3) -> f64;
    fn u(&self, x: &Vec3) -> Vec3;
    /// Level function of the support: below 1 inside, 1 on the boundary.
    fn support_level(&self, x: &Vec3) -> f64;
}

/// A time-dependent pair `(rho, u)` solving `rho (u_t + u.grad u) + Lambda grad(rho^gamma) = 0`.
pub trait FlowField: Sync {
    type Snap: Snapshot;
    fn at(&self, t: f64) -> Result<Self::Snap, EulerianError>;
    /// Pressure matrix; the identity for the original Euler system.
    fn lambda(&self) -> Mat3;
    fn gamma(&self) -> f64;
    /// Matrix `M` with support `M B_1` at time `t`, used to size residual grids.
    fn support_matrix(&self, t: f64) -> Result<Mat3, EulerianError>;
}

#[derive(Debug, Clone, Copy)]
pub struct AffineSnapshot {
    a_inv: Mat3,
    grad_u: Mat3,
    inv_det: f64,
    params: GammaParams,
}

impl AffineSnapshot {
    pub fn new(a: &Mat3, a_dot: &Mat3, params: &GammaParams) -> Self {
        let a_inv = a.try_inverse().expect("det A > 0");
        Self { a_inv, grad_u: a_dot * a_inv, inv_det: 1.0 / a.determinant(), params: *params }
    }
}

impl Snapshot for AffineSnapshot {
    fn rho(&self, x: &Vec3) -> f64 {
        let y = self.a_inv * x;
        self.params.w_of_r2(y.norm_squared()).powf(self.params.alpha) * self.inv_det
    }

    fn u(&self, x: &Vec3) -> Vec3 {
        self.grad_u * x
    }

    fn support_level(&self, x: &Vec3) -> f64 {
        (self.a_inv * x).norm()
    }
}

/// The affine solution along a trajectory.
pub struct AffineFlow<'a> {
    pub traj: &'a AffineTrajectory,
}

impl FlowField for AffineFlow<'_> {
    type Snap = AffineSnapshot;

    fn at(&self, t: f64) -> Result<AffineSnapshot, EulerianError> {
        let st = self.traj.state_at_t(t)?;
        Ok(AffineSnapshot::new(&st.a, &st.a_dot, self.traj.params()))
    }

    fn lambda(&self) -> Mat3 {
        Mat3::identity()
    }

    fn gamma(&self) -> f64 {
        self.traj.params().gamma
    }

    fn support_matrix(&self, t: f64) -> Result<Mat3, EulerianError> {
        Ok(self.traj.state_at_t(t)?.a)
    }
}

/// Image of a flow under the GL+(3) action with matrix `B`:
/// `rho~(s, y) = det B rho(s/k, B y)`, `u~(s, y) = B^(-1) u(s/k, B y) / k`, `k = det B^((1-3 gamma)/6)`.
pub struct Transformed<F> {
    pub inner: F,
    b: Mat3,
    b_inv: Mat3,
    det: f64,
    kappa: f64,
    lambda: Mat3,
}

/// Applies the GL+(3) change of variables to `inner`.
pub fn gl3_transform<F: FlowField>(inner: F, b: &Mat3) -> Result<Transformed<F>, EulerianError> {
    let det = b.determinant();
    if !(det > 0.0) {
        return Err(EulerianError::NonPositiveDeterminant(det));
    }
    let b_inv = b.try_inverse().ok_or(EulerianError::NonPositiveDeterminant(det))?;
    let kappa = det.powf((1.0 - 3.0 * inner.gamma()) / 6.0);
    let lambda = b_inv * inner.lambda() * b_inv.transpose() * det.powf(2.0 / 3.0);
    Ok(Transformed { inner, b: *b, b_inv, det, kappa, lambda })
}

pub struct TransformedSnapshot<S> {
    inner: S,
    b: Mat3,
    b_inv: Mat3,
    det: f64,
    kappa: f64,
}

impl<S: Snapshot> Snapshot for TransformedSnapshot<S> {
    fn rho(&self, y: &Vec3) -> f64 {
        self.det * self.inner.rho(&(self.b * y))
    }

    fn u(&self, y: &Vec3) -> Vec3 {
        self.b_inv * self.inner.u(&(self.b * y)) / self.kappa
    }

    fn support_level(&self, y: &Vec3) -> f64 {
        self.inner.support_level(&(self.b * y))
    }
}

impl<F: FlowField> FlowField for Transformed<F> {
    type Snap = TransformedSnapshot<F::Snap>;

    fn at(&self, s: f64) -> Result<Self::Snap, EulerianError> {
        Ok(TransformedSnapshot {
            inner: self.inner.at(s / self.kappa)?,
            b: self.b,
            b_inv: self.b_inv,
            det: self.det,
            kappa: self.kappa,
        })
    }

    fn lambda(&self) -> Mat3 {
        self.lambda
    }

    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    fn support_matrix(&self, s: f64) -> Result<Mat3, EulerianError> {
        Ok(self.b_inv * self.inner.support_matrix(s / self.kappa)?)
    }
}

/// Negative control: the density of `inner` multiplied by a constant factor.
pub struct ScaledDensity<F> {
    pub inner: F,
    pub factor: f64,
}

pub struct ScaledSnapshot<S> {
    inner: S,
    factor: f64,
}

impl<S: Snapshot> Snapshot for ScaledSnapshot<S> {
    fn rho(&self, x: &Vec3) -> f64 {
        self.factor * self.inner.rho(x)
    }

    fn u(&self, x: &Vec3) -> Vec3 {
        self.inner.u(x)
    }

    fn support_level(&self, x: &Vec3) -> f64 {
        self.inner.support_level(x)
    }
}

impl<F: FlowField> FlowField for ScaledDensity<F> {
    type Snap = ScaledSnapshot<F::Snap>;

    fn at(&self, t: f64) -> Result<Self::Snap, EulerianError> {
        Ok(ScaledSnapshot { inner: self.inner.at(t)?, factor: self.factor })
    }

    fn lambda(&self) -> Mat3 {
        self.inner.lambda()
    }

    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    fn support_matrix(&self, t: f64) -> Result<Mat3, EulerianError> {
        self.inner.support_matrix(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSpec {
    /// Nodes per axis of the cell-centred bounding-box grid.
    pub n: usize,
    /// Nodes with support level at most this value form the subdomain.
    pub interior_level: f64,
    /// Ratio of dt to the smallest spacing.
    pub dt_over_h: f64,
}

impl Default for ResidualSpec {
    fn default() -> Self {
        Self { n: 32, interior_level: 0.6, dt_over_h: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Largest of the three grid spacings.
    pub h: f64,
    pub dt: f64,
    pub nodes: usize,
    pub continuity_l2: f64,
    pub continuity_sup: f64,
    pub momentum_l2: f64,
    pub momentum_sup: f64,
}

/// Observed convergence orders `log2(|r_h| / |r_{h/2}|)` of two reports `(continuity, momentum)`.
pub fn observed_orders(coarse: &ResidualReport, fine: &ResidualReport) -> (f64, f64) {
    let ratio = coarse.h / fine.h;
    (
        (coarse.continuity_l2 / fine.continuity_l2).ln() / ratio.ln(),
        (coarse.momentum_l2 / fine.momentum_l2).ln() / ratio.ln(),
    )
}

/// Central-difference residuals of continuity and momentum at time `t` on the bounding box
/// of the support, restricted to the interior subdomain.
pub fn euler_residual<F: FlowField>(
    field: &F,
    t: f64,
    spec: &ResidualSpec,
    exec: Exec,
) -> Result<ResidualReport, EulerianError> {
    let m = field.support_matrix(t)?;
    let n = spec.n;
    let half = Vec3::from_fn(|i, _| m.row(i).norm());
    let hs = half * (2.0 / n as f64);
    let dt = spec.dt_over_h * hs.min();
    let (sm, s0, sp) = (field.at(t - dt)?, field.at(t)?, field.at(t + dt)?);
    let lambda = field.lambda();
    let gamma = field.gamma();
    let coord = |ax: usize, i: usize| -half[ax] + (i as f64 + 0.5) * hs[ax];
    let node = |idx: usize| Vec3::new(coord(0, idx / (n * n)), coord(1, (idx / n) % n), coord(2, idx % n));
    let e = [Vec3::x(), Vec3::y(), Vec3::z()];

    let inside: Vec<usize> = (0..n * n * n).filter(|&i| s0.support_level(&node(i)) <= spec.interior_level).collect();
    if inside.is_empty() {
        return Err(EulerianError::EmptySubdomain);
    }
    for &i in &inside {
        let x = node(i);
        for snap in [&sm, &s0, &sp] {
            for (ax, d) in e.iter().enumerate() {
                for sgn in [-2.0, 2.0] {
                    let p = x + d * (sgn * hs[ax]);
                    if !(snap.rho(&p) > 0.0) {
                        return Err(EulerianError::SubdomainTouchesBoundary { t, point: [p.x, p.y, p.z] });
                    }
                }
            }
        }
    }

    let res = exec.map(inside.len(), |k| {
        let x = node(inside[k]);
        let rho = s0.rho(&x);
        let u = s0.u(&x);
        let mut cont = (sp.rho(&x) - sm.rho(&x)) / (2.0 * dt);
        let mut grad_u = Mat3::zeros();
        let mut grad_p = Vec3::zeros();
        for (i, d) in e.iter().enumerate() {
            let h = hs[i];
            let (xp, xm) = (x + d * h, x - d * h);
            let (rp, rm) = (s0.rho(&xp), s0.rho(&xm));
            let (up, um) = (s0.u(&xp), s0.u(&xm));
            cont += (rp * up[i] - rm * um[i]) / (2.0 * h);
            grad_u.set_column(i, &((up - um) / (2.0 * h)));
            grad_p[i] = (rp.powf(gamma) - rm.powf(gamma)) / (2.0 * h);
        }
        let u_t = (sp.u(&x) - sm.u(&x)) / (2.0 * dt);
        let mom = (u_t + grad_u * u) * rho + lambda * grad_p;
        (cont, mom.norm())
    });
    let vol = hs.x * hs.y * hs.z;
    let (mut c2, mut m2, mut csup, mut msup) = (0.0, 0.0, 0.0f64, 0.0f64);
    for (c, m) in &res {
        c2 += c * c;
        m2 += m * m;
        csup = csup.max(c.abs());
        msup = msup.max(*m);
    }
    Ok(ResidualReport {
        h: hs.max(),
        dt,
        nodes: inside.len(),
        continuity_l2: (c2 * vol).sqrt(),
        continuity_sup: csup,
        momentum_l2: (m2 * vol).sqrt(),
        momentum_sup: msup,
    })
}

/// Largest singular value of `A`, the radius of the support ellipsoid `A B_1`.
pub fn support_radius(a: &Mat3) -> f64 {
    a.singular_values().max()
}

/// Total mass `int rho dx` by quadrature along rays to the support boundary in physical space.
pub fn mass_quadrature(a: &Mat3, params: &GammaParams, n_r: usize, n_theta: usize, n_phi: usize) -> f64 {
    let a_inv = a.try_inverse().expect("det A > 0");
    let (ct, wt) = gauss_legendre_on(n_theta, -1.0, 1.0);
    let (sr, wr) = gauss_legendre_on(n_r, 0.0, 1.0);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut total = 0.0;
    for (c, wc) in ct.iter().zip(&wt) {
        let s = (1.0 - c * c).sqrt();
        for k in 0..n_phi {
            let phi = (k as f64 + 0.5) * dphi;
            let omega = Vec3::new(s * phi.cos(), s * phi.sin(), *c);
            let rb = 1.0 / (a_inv * omega).norm();
            let mut ray = 0.0;
            for (q, wq) in sr.iter().zip(&wr) {
                let r = q * rb;
                ray += wq * r * r * affine_density(a, params, &(omega * r));
            }
            total += wc * dphi * ray * rb;
        }
    }
    total
}

/// Closed-form mass `4 pi w0^alpha int_0^1 r^2 (1 - r^2)^alpha dr` evaluated by a 400-point rule.
pub fn mass_reference(params: &GammaParams) -> f64 {
    let (x, w) = gauss_legendre_on(400, 0.0, 1.0);
    let s: f64 = x.iter().zip(&w).map(|(r, wi)| wi * r * r * params.w_of_r2(r * r).powf(params.alpha)).sum();
    4.0 * std::f64::consts::PI * s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportReport {
    /// `(t, support radius)` samples over the trajectory.
    pub radius: Vec<(f64, f64)>,
    /// Slope of the linear fit of the radius over the second half of the time range.
    pub growth_slope: f64,
    pub growth_r_squared: f64,
    /// One-sided estimate of the outward normal derivative of `c_s^2 = gamma rho^(gamma-1)` at `t0`.
    pub dcs2_dn: f64,
    /// Exact value of the same derivative.
    pub dcs2_dn_exact: f64,
}

/// Support growth and physical vacuum checks; the normal derivative is taken at time `t0`
/// along the direction of the largest semi-axis, with one-sided step `h`.
pub fn support_and_vacuum_checks(traj: &AffineTrajectory, t0: f64, h: f64) -> Result<SupportReport, EulerianError> {
    let params = traj.params();
    let radius: Vec<(f64, f64)> = traj.samples().iter().map(|s| (s.t, support_radius(&s.a))).collect();
    let t_half = 0.5 * traj.t_end();
    let tail: Vec<&(f64, f64)> = radius.iter().filter(|(t, _)| *t >= t_half).collect();
    let xs: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let (slope, _, r2) = linear_fit(&xs, &ys).unwrap_or((f64::NAN, f64::NAN, f64::NAN));

    let st = traj.state_at_t(t0)?;
    let svd = st.a.svd(true, false);
    let k = svd.singular_values.imax();
    let dir = svd.u.expect("u requested").column(k).into_owned();
    let a_inv = st.a.try_inverse().expect("det A > 0");
    let e = a_inv * dir * svd.singular_values[k];
    let xb = st.a * e;
    let normal = (a_inv.transpose() * e).normalize();
    let det = st.a.determinant();
    let cs2 = |x: &Vec3| params.gamma * affine_density(&st.a, params, x).powf(params.gamma - 1.0);
    let f0 = cs2(&xb);
    let f1 = cs2(&(xb - normal * h));
    let f2 = cs2(&(xb - normal * (2.0 * h)));
    let dcs2_dn = (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h);
    let dcs2_dn_exact =
        params.gamma * det.powf(1.0 - params.gamma) * (-2.0 * params.w_scale()) * e.dot(&(a_inv * normal));
    Ok(SupportReport { radius, growth_slope: slope, growth_r_squared: r2, dcs2_dn, dcs2_dn_exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::integrate_affine;

    #[test]
    fn density_examples() {
        let p = GammaParams::default();
        let rho0 = affine_density(&Mat3::identity(), &p, &Vec3::zeros());
        assert!((rho0 - 0.2f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(affine_density(&Mat3::identity(), &p, &Vec3::new(0.0, 1.0, 0.0)), 0.0);
        assert_eq!(affine_density(&Mat3::identity(), &p, &Vec3::new(0.0, 1.5, 0.0)), 0.0);
    }

    #[test]
    fn velocity_examples() {
        let a = Mat3::identity() * 2f64.sqrt();
        let a_dot = Mat3::identity() / 2f64.sqrt();
        let x = Vec3::new(0.3, -0.2, 0.7);
        assert!((affine_velocity(&a, &a_dot, &x) - x / 2.0).norm() < 1e-15);
        assert_eq!(affine_velocity(&Mat3::identity(), &Mat3::zeros(), &x), Vec3::zeros());
    }

    #[test]
    fn mass_matches_beta_integral() {
        let p = GammaParams::default();
        let exact = 0.2f64.powf(1.5) * std::f64::consts::PI.powi(2) / 8.0;
        assert!((mass_reference(&p) - exact).abs() < 1e-8);
        let a = Mat3::new(2.0, 0.3, 0.0, 0.0, 1.0, 0.1, 0.2, 0.0, 0.5);
        let m = mass_quadrature(&a, &p, 96, 48, 64);
        assert!((m - exact).abs() < 1e-6 * exact, "{m} vs {exact}");
    }

    #[test]
    fn vacuum_slope_at_rest() {
        let p = GammaParams::default();
        let tr = integrate_affine(&p, &Mat3::identity(), &Mat3::zeros(), 10.0, 1e-10).unwrap();
        let rep = support_and_vacuum_checks(&tr, 0.0, 1e-3).unwrap();
        assert!((rep.dcs2_dn + 2.0 / 3.0).abs() < 1e-9);
        assert!((rep.dcs2_dn_exact + 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn support_radius_of_diagonal() {
        let a = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 0.5));
        assert!((support_radius(&a) - 2.0).abs() < 1e-14);
    }
}
