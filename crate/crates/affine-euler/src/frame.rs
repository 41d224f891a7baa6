//! Frame quantities derived from an affine state: mu, O, Lambda, Gamma* and their tau-derivatives.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affine::{affine_acceleration, Mat3};
use crate::params::GammaParams;

#[derive(Debug, Error, PartialEq)]
pub enum FrameError {
    #[error("determinant must be positive (got {0})")]
    NonPositiveDeterminant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedFrame {
    pub mu: f64,
    /// mu_tau / mu, equal to d mu / dt.
    pub mu_tau_over_mu: f64,
    pub o: Mat3,
    pub lambda: Mat3,
    pub gamma_star: Mat3,
    pub gamma_star_tau: Mat3,
    /// Rows are the eigenvectors of Lambda, so that Lambda = P^T diag(d) P.
    pub p: Mat3,
    /// Eigenvalues of Lambda in descending order.
    pub d: [f64; 3],
    pub lambda_tau: Mat3,
    pub lambda_tautau: Mat3,
}

/// Computes the frame analytically from `(A, A_dot)`; the second derivative comes from the ODE.
pub fn derived_frame(params: &GammaParams, a: &Mat3, a_dot: &Mat3) -> Result<DerivedFrame, FrameError> {
    let det = a.determinant();
    let a_inv = a.try_inverse().filter(|_| det > 0.0).ok_or(FrameError::NonPositiveDeterminant(det))?;
    let a_tt = affine_acceleration(params, a).ok_or(FrameError::NonPositiveDeterminant(det))?;
    let id = Mat3::identity();
    let mu = det.cbrt();
    let b = a_inv * a_dot;
    let tr = b.trace();
    let tr_t = (-b * b + a_inv * a_tt).trace();

    let o = a / mu;
    let lambda = sym(&(a_inv * a_inv.transpose() * (mu * mu)));
    let gamma_star = (b - id * (tr / 3.0)) * mu;
    let o_tautau = (a_tt - (a_dot * tr + a * tr_t) / 3.0) * mu;
    let gamma_star_tau = -gamma_star * gamma_star + a_inv * o_tautau * mu;
    let lambda_tau = -gamma_star * lambda - lambda * gamma_star.transpose();
    let lambda_tautau = -gamma_star_tau * lambda
        - gamma_star * lambda_tau
        - lambda_tau * gamma_star.transpose()
        - lambda * gamma_star_tau.transpose();
    let (p, d) = eigen_frame(&lambda);
    Ok(DerivedFrame {
        mu,
        mu_tau_over_mu: mu * tr / 3.0,
        o,
        lambda,
        gamma_star,
        gamma_star_tau,
        p,
        d,
        lambda_tau,
        lambda_tautau,
    })
}

fn sym(m: &Mat3) -> Mat3 {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition `S = P^T diag(d) P` with descending eigenvalues and rows of `P`
/// normalised so that their first entry of magnitude above 1e-12 is positive.
pub fn eigen_frame(s: &Mat3) -> (Mat3, [f64; 3]) {
    let eig = SymmetricEigen::new(*s);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut p = Mat3::zeros();
    let mut d = [0.0; 3];
    for (row, &k) in order.iter().enumerate() {
        d[row] = eig.eigenvalues[k];
        let mut v = eig.eigenvectors.column(k).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        p.set_row(row, &v.transpose());
    }
    (p, d)
}

/// Reorders and re-signs the rows of `p` (and `d`) to maximise overlap with `prev`.
///
/// Keeps `P(tau)` continuous through sign flips and eigenvalue crossings.
pub fn align_eigen_frame(p: &Mat3, d: &[f64; 3], prev: &Mat3) -> (Mat3, [f64; 3]) {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let overlap = |i: usize, j: usize| p.row(i).dot(&prev.row(j));
    let best = PERMS
        .iter()
        .max_by(|x, y| {
            let sx: f64 = (0..3).map(|j| overlap(x[j], j).abs()).sum();
            let sy: f64 = (0..3).map(|j| overlap(y[j], j).abs()).sum();
            sx.total_cmp(&sy)
        })
        .expect("non-empty");
    let mut q = Mat3::zeros();
    let mut e = [0.0; 3];
    for j in 0..3 {
        let sign = if overlap(best[j], j) < 0.0 { -1.0 } else { 1.0 };
        q.set_row(j, &(p.row(best[j]) * sign));
        e[j] = d[best[j]];
    }
    (q, e)
}

/// Conserved circulation matrix `A^T A_dot - A_dot^T A`.
pub fn circulation(a: &Mat3, a_dot: &Mat3) -> Mat3 {
    a.transpose() * a_dot - a_dot.transpose() * a
}

/// Residual of the contracted identity `Lambda_tau + 2 Lambda Gamma*^T`.
///
/// It vanishes exactly when `Gamma* Lambda` is symmetric, which happens when the circulation is zero.
pub fn contracted_lambda_tau_residual(f: &DerivedFrame) -> f64 {
    (f.lambda_tau + f.lambda * f.gamma_star.transpose() * 2.0).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> GammaParams {
        GammaParams::default()
    }

    #[test]
    fn diagonal_example() {
        let a = Mat3::from_diagonal(&nalgebra::Vector3::new(2.0, 1.0, 0.5));
        let f = derived_frame(&p(), &a, &Mat3::zeros()).unwrap();
        let expect = Mat3::from_diagonal(&nalgebra::Vector3::new(0.25, 1.0, 4.0));
        assert!((f.lambda - expect).norm() < 1e-14);
        assert!((f.d[0] - 4.0).abs() < 1e-14 && (f.d[1] - 1.0).abs() < 1e-14 && (f.d[2] - 0.25).abs() < 1e-14);
        let rec = f.p.transpose() * Mat3::from_diagonal(&f.d.into()) * f.p;
        assert!((rec - f.lambda).norm() <= 1e-12 * f.lambda.norm());
    }

    #[test]
    fn conformal_lambda_is_identity() {
        let r = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 0.7).into_inner();
        let f = derived_frame(&p(), &(r * 2.5), &(r * 0.3)).unwrap();
        assert!((f.lambda - Mat3::identity()).norm() < 1e-13);
        assert!((f.o.determinant() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn static_identity_frame() {
        let f = derived_frame(&p(), &Mat3::identity(), &Mat3::zeros()).unwrap();
        assert_eq!(f.gamma_star, Mat3::zeros());
        assert_eq!(f.lambda_tau, Mat3::zeros());
    }

    #[test]
    fn contracted_identity_depends_on_circulation() {
        let a = Mat3::new(1.2, 0.1, 0.0, 0.1, 0.9, 0.05, 0.0, 0.05, 1.0);
        let s = Mat3::new(0.3, 0.1, -0.2, 0.1, 0.5, 0.0, -0.2, 0.0, 0.1);
        let irrotational = derived_frame(&p(), &a, &(s * a)).unwrap();
        assert!(circulation(&a, &(s * a)).norm() < 1e-15);
        assert!(contracted_lambda_tau_residual(&irrotational) < 1e-12);
        let w = Mat3::new(0.0, 0.4, 0.0, -0.4, 0.0, 0.0, 0.0, 0.0, 0.0);
        let rotational = derived_frame(&p(), &a, &((s + w) * a)).unwrap();
        assert!(contracted_lambda_tau_residual(&rotational) > 1e-3);
    }

    #[test]
    fn align_recovers_previous_ordering() {
        let (p0, d0) = eigen_frame(&Mat3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 0.5)));
        let flipped = Mat3::from_rows(&[-p0.row(1), p0.row(0).into_owned(), p0.row(2).into_owned()]);
        let (q, e) = align_eigen_frame(&flipped, &[d0[1], d0[0], d0[2]], &p0);
        assert!((q - p0).norm() < 1e-15);
        assert_eq!(e, d0);
    }
}
