//! The trace identity behind the energy estimate, checked along matrix paths with
//! fourth-order differences in tau.
//!
//! With `Lambda = P^T Q P`, `Q = diag(d)` and `Mt = P M P^T`,
//!
//! `Tr(Lambda M Lambda^-1 M_tau^T) = 1/2 d/dtau sum (d_k/d_l) Mt_kl^2
//!     - 1/2 sum (d_k/d_l)_tau Mt_kl^2 - Tr(Q Mt Q^-1 (P_tau P^T Mt^T + Mt^T P P_tau^T))`.

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DiagError;
use crate::eulerian::Vec3;
use crate::frame::{align_eigen_frame, eigen_frame};
use crate::Mat3;

/// Smallest eigenvalue gap accepted along a path.
pub const MIN_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyLemmaReport {
    pub max_residual: f64,
    /// Largest `|Tr(Lambda M Lambda^-1 M_tau^T)|` seen, for scale.
    pub max_lhs: f64,
    pub points: usize,
}

/// Synthetic smooth path: `M = M0 + tau M1 + tau^2 M2 + sin(tau) M3` and
/// `Lambda = R^T diag(d) R` with `R = exp(tau K) R0` and `log d_i = c_i + s_i sin(om_i tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPath {
    pub m: [Mat3; 4],
    pub axis: Vec3,
    pub r0: Mat3,
    pub c: [f64; 3],
    pub s: [f64; 3],
    pub om: [f64; 3],
}

impl MatrixPath {
    pub fn m_at(&self, tau: f64) -> Mat3 {
        self.m[0] + self.m[1] * tau + self.m[2] * (tau * tau) + self.m[3] * tau.sin()
    }

    pub fn lambda_at(&self, tau: f64) -> Mat3 {
        let r = Rotation3::from_scaled_axis(self.axis * tau).into_inner() * self.r0;
        let logs: [f64; 3] = [0, 1, 2].map(|i| self.c[i] + self.s[i] * (self.om[i] * tau).sin());
        let mean = logs.iter().sum::<f64>() / 3.0;
        let d = Vec3::from_fn(|i, _| (logs[i] - mean).exp());
        r.transpose() * Mat3::from_diagonal(&d) * r
    }
}

/// Seeded path with well separated eigenvalues of `Lambda`.
pub fn random_path(seed: u64) -> MatrixPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mat = |rng: &mut ChaCha8Rng| Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let m = [mat(&mut rng), mat(&mut rng), mat(&mut rng) * 0.5, mat(&mut rng)];
    let axis = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let r0 = Rotation3::from_scaled_axis(Vec3::from_fn(|_, _| rng.gen_range(-3.0..3.0))).into_inner();
    let c = [0.6, 0.0, -0.6].map(|x: f64| x + rng.gen_range(-0.05..0.05));
    let s = [0; 3].map(|_| rng.gen_range(0.0..0.2));
    let om = [0; 3].map(|_| rng.gen_range(0.5..2.0));
    MatrixPath { m, axis, r0, c, s, om }
}

fn d4<T>(f: &[T; 5], h: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    (f[0] - f[4] + (f[3] - f[1]) * 8.0) * (1.0 / (12.0 * h))
}

/// Evaluates both sides of the identity at each `tau` in `taus` with step `dtau`.
pub fn key_lemma_check<M, L>(m: M, lambda: L, taus: &[f64], dtau: f64) -> Result<KeyLemmaReport, DiagError>
where
    M: Fn(f64) -> Mat3,
    L: Fn(f64) -> Mat3,
{
    if !(dtau > 0.0) {
        return Err(DiagError::Invalid(format!("dtau must be positive, got {dtau}")));
    }
    let mut max_residual: f64 = 0.0;
    let mut max_lhs: f64 = 0.0;
    for &tau in taus {
        let ts: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0].map(|j| tau + j * dtau);
        let (p_mid, _) = eigen_frame(&lambda(tau));
        let mut ps = [Mat3::zeros(); 5];
        let mut ds = [[0.0; 3]; 5];
        for (j, &t) in ts.iter().enumerate() {
            let (p, d) = eigen_frame(&lambda(t));
            let (p, d) = align_eigen_frame(&p, &d, &p_mid);
            let gap = (d[0] - d[1]).abs().min((d[1] - d[2]).abs()).min((d[0] - d[2]).abs());
            if gap < MIN_GAP {
                return Err(DiagError::EigenCrossing { tau: t, gap });
            }
            ps[j] = p;
            ds[j] = d;
        }
        let ms: [Mat3; 5] = ts.map(&m);
        let mt: [Mat3; 5] = [0, 1, 2, 3, 4].map(|j| ps[j] * ms[j] * ps[j].transpose());
        let energy = |j: usize| -> f64 {
            let mut s = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    s += ds[j][k] / ds[j][l] * mt[j][(k, l)].powi(2);
                }
            }
            0.5 * s
        };

        let lam = lambda(tau);
        let lam_inv = lam.try_inverse().ok_or_else(|| DiagError::Invalid("singular Lambda".into()))?;
        let m_tau = d4(&ms, dtau);
        let lhs = (lam * ms[2] * lam_inv * m_tau.transpose()).trace();

        let de = d4(&[0, 1, 2, 3, 4].map(energy), dtau);
        let mut ratio_term = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                let ratio = d4(&[0, 1, 2, 3, 4].map(|j| ds[j][k] / ds[j][l]), dtau);
                ratio_term += ratio * mt[2][(k, l)].powi(2);
            }
        }
        let p = ps[2];
        let p_tau = d4(&ps, dtau);
        let q = Mat3::from_diagonal(&Vec3::from(ds[2]));
        let q_inv = Mat3::from_diagonal(&Vec3::from(ds[2].map(|x| 1.0 / x)));
        let mm = mt[2];
        let frame_term = (q * mm * q_inv * (p_tau * p.transpose() * mm.transpose() + mm.transpose() * p * p_tau.transpose()))
            .trace();
        let rhs = de - 0.5 * ratio_term - frame_term;
        max_residual = max_residual.max((lhs - rhs).abs());
        max_lhs = max_lhs.max(lhs.abs());
    }
    Ok(KeyLemmaReport { max_residual, max_lhs, points: taus.len() })
}
