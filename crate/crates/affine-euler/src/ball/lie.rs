//! Flow-map Jacobians and the Lie derivatives along `eta = y + theta`.

use thiserror::Error;

use super::grid::CartGrid;
use crate::eulerian::Vec3;
use crate::Mat3;

#[derive(Debug, Error, PartialEq)]
pub enum FlowMapError {
    #[error("flow map degenerates: J = {j} at cell {index}")]
    NonPositiveJacobian { index: usize, j: f64 },
}

/// `D eta`, `J = det D eta`, `A = (D eta)^(-1)` and the cofactor matrix `J A` per cell.
#[derive(Debug, Clone)]
pub struct FlowMapDiff {
    pub d_eta: Vec<Mat3>,
    pub j: Vec<f64>,
    pub inv_jac: Vec<Mat3>,
    pub cof: Vec<Mat3>,
    pub active: Vec<bool>,
}

/// Adjugate of `m` from 2x2 minors, so that `adj(m) m = det(m) Id`.
pub fn adjugate(m: &Mat3) -> Mat3 {
    Mat3::from_fn(|i, j| {
        let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
        let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
        m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)]
    })
}

impl FlowMapDiff {
    /// Builds the Jacobian data from `theta` with the grid stencils.
    pub fn new(grid: &CartGrid, theta: &[Vec3]) -> Result<Self, FlowMapError> {
        Self::from_gradient(&grid.jacobian(theta), &grid.active)
    }

    /// Builds the Jacobian data from `D theta`.
    pub fn from_gradient(d_theta: &[Mat3], active: &[bool]) -> Result<Self, FlowMapError> {
        let n = d_theta.len();
        let (mut d_eta, mut j, mut inv_jac, mut cof) =
            (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for (i, dt) in d_theta.iter().enumerate() {
            let de = Mat3::identity() + dt;
            if !active[i] {
                d_eta.push(Mat3::identity());
                j.push(1.0);
                inv_jac.push(Mat3::identity());
                cof.push(Mat3::identity());
                continue;
            }
            let det = de.determinant();
            if !(det > 0.0) {
                return Err(FlowMapError::NonPositiveJacobian { index: i, j: det });
            }
            let adj = adjugate(&de);
            d_eta.push(de);
            j.push(det);
            inv_jac.push(de.try_inverse().expect("det > 0"));
            cof.push(adj);
        }
        Ok(Self { d_eta, j, inv_jac, cof, active: active.to_vec() })
    }

    /// The chart `eta = y`.
    pub fn identity(active: &[bool]) -> Self {
        let n = active.len();
        Self {
            d_eta: vec![Mat3::identity(); n],
            j: vec![1.0; n],
            inv_jac: vec![Mat3::identity(); n],
            cof: vec![Mat3::identity(); n],
            active: active.to_vec(),
        }
    }

    /// `max |A D eta - Id|` over active cells.
    pub fn inverse_residual(&self) -> f64 {
        self.max_active(|i| (self.inv_jac[i] * self.d_eta[i] - Mat3::identity()).amax())
    }

    /// `max |cof - J A|` over active cells.
    pub fn cofactor_residual(&self) -> f64 {
        self.max_active(|i| (self.cof[i] - self.inv_jac[i] * self.j[i]).amax())
    }

    pub fn min_jacobian(&self) -> f64 {
        (0..self.j.len()).filter(|&i| self.active[i]).map(|i| self.j[i]).fold(f64::INFINITY, f64::min)
    }

    fn max_active<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        (0..self.j.len()).filter(|&i| self.active[i]).map(f).fold(0.0, f64::max)
    }

    /// `[grad_eta F]^i_r = A^s_r F^i,_s` from `D F`.
    pub fn nabla_eta(&self, df: &[Mat3]) -> Vec<Mat3> {
        df.iter().zip(&self.inv_jac).map(|(g, a)| g * a).collect()
    }

    /// `div_eta F = A^s_l F^l,_s`.
    pub fn div_eta(&self, df: &[Mat3]) -> Vec<f64> {
        df.iter().zip(&self.inv_jac).map(|(g, a)| (g * a).trace()).collect()
    }

    /// Vector curl `eps_ijk Lambda_jm A^s_m F^k,_s`.
    pub fn curl(&self, df: &[Mat3], lambda: &Mat3) -> Vec<Vec3> {
        df.iter().zip(&self.inv_jac).map(|(g, a)| curl_at(g, a, lambda)).collect()
    }

    /// Antisymmetric curl matrix `Lambda_jm A^s_m F^i,_s - Lambda_im A^s_m F^j,_s`.
    pub fn curl_matrix(&self, df: &[Mat3], lambda: &Mat3) -> Vec<Mat3> {
        df.iter().zip(&self.inv_jac).map(|(g, a)| curl_matrix_at(g, a, lambda)).collect()
    }
}

/// Pointwise curl matrix from `g = D F`, `a = A` and `Lambda`.
pub fn curl_matrix_at(g: &Mat3, a: &Mat3, lambda: &Mat3) -> Mat3 {
    let m = g * a * lambda;
    m - m.transpose()
}

/// Pointwise vector curl from `g = D F`, `a = A` and `Lambda`.
pub fn curl_at(g: &Mat3, a: &Mat3, lambda: &Mat3) -> Vec3 {
    let m = g * a * lambda;
    Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)])
}
