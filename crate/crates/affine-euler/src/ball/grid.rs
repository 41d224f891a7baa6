//! Radial and Cartesian discretisations of the unit ball with weighted quadrature.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use super::{psi, R_MIN};
use crate::eulerian::Vec3;
use crate::exec::Exec;
use crate::params::GammaParams;
use crate::Mat3;

/// Which localisation factor multiplies a weighted integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Psi,
    OneMinusPsi,
    Both,
}

impl Side {
    pub fn factor(self, psi: f64) -> f64 {
        match self {
            Side::Psi => psi,
            Side::OneMinusPsi => 1.0 - psi,
            Side::Both => 1.0,
        }
    }
}

/// Squared pointwise magnitude used by the weighted norms.
pub trait SqNorm {
    fn sq_norm(&self) -> f64;
}

impl SqNorm for f64 {
    fn sq_norm(&self) -> f64 {
        self * self
    }
}

impl SqNorm for Vec3 {
    fn sq_norm(&self) -> f64 {
        self.norm_squared()
    }
}

impl SqNorm for Mat3 {
    fn sq_norm(&self) -> f64 {
        self.norm_squared()
    }
}

/// Parity of a radial profile under `r -> -r`, used for the ghost value at the centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Cell-centred grid on `(0, 1)` with `r_i = (i + 1/2) dr`.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub params: GammaParams,
    pub n: usize,
    pub dr: f64,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub psi: Vec<f64>,
}

impl RadialGrid {
    pub fn new(params: &GammaParams, n: usize) -> Self {
        let dr = 1.0 / n as f64;
        let r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * dr).collect();
        let w = r.iter().map(|x| params.w_of_r2(x * x)).collect();
        let psi = r.iter().map(|x| psi(*x)).collect();
        Self { params: *params, n, dr, r, w, psi }
    }

    /// Face radius `f dr` for `f in 0..=n`.
    pub fn face(&self, f: usize) -> f64 {
        f as f64 * self.dr
    }

    /// Centred `d/dr` with an odd or even reflection at the centre and a one-sided
    /// second-order formula in the last cell.
    pub fn d_r(&self, f: &[f64], parity: Parity) -> Vec<f64> {
        let n = self.n;
        let sign = match parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        };
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * self.dr)
                } else {
                    let left = if i == 0 { sign * f[0] } else { f[i - 1] };
                    (f[i + 1] - left) / (2.0 * self.dr)
                }
            })
            .collect()
    }

    /// `4 pi sum phi w^k r^2 g dr` for pointwise values `g`.
    pub fn integrate(&self, g: &[f64], k: f64, side: Side) -> f64 {
        let s: f64 = (0..self.n)
            .map(|i| side.factor(self.psi[i]) * self.w[i].powf(k) * self.r[i] * self.r[i] * g[i])
            .sum();
        4.0 * PI * s * self.dr
    }

    /// `int phi w^k |f|^2 dy` for a radial field.
    pub fn weighted_norm<T: SqNorm>(&self, f: &[T], k: f64, side: Side) -> f64 {
        let sq: Vec<f64> = f.iter().map(SqNorm::sq_norm).collect();
        self.integrate(&sq, k, side)
    }
}

/// Cell-centred grid on the cube `[-1, 1]^3` with `n` cells per axis; cells whose centre lies
/// in the open unit ball are active.
#[derive(Debug, Clone)]
pub struct CartGrid {
    pub params: GammaParams,
    pub n: usize,
    pub h: f64,
    pub centres: Vec<Vec3>,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub psi: Vec<f64>,
    pub active: Vec<bool>,
    /// Indices of the active cells.
    pub active_list: Vec<usize>,
    pub exec: Exec,
}

impl CartGrid {
    pub fn new(params: &GammaParams, n: usize) -> Self {
        let h = 2.0 / n as f64;
        let c = |i: usize| -1.0 + (i as f64 + 0.5) * h;
        let mut centres = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    centres.push(Vec3::new(c(i), c(j), c(k)));
                }
            }
        }
        let r: Vec<f64> = centres.iter().map(|y| y.norm()).collect();
        let w = r.iter().map(|x| params.w_of_r2(x * x)).collect();
        let psi = r.iter().map(|x| psi(*x)).collect();
        let active: Vec<bool> = r.iter().map(|x| *x < 1.0).collect();
        let active_list = (0..active.len()).filter(|&i| active[i]).collect();
        Self { params: *params, n, h, centres, r, w, psi, active, active_list, exec: Exec::default() }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        [idx / (self.n * self.n), (idx / self.n) % self.n, idx % self.n]
    }

    /// Active neighbour `steps` cells away along `axis`.
    pub fn neighbour(&self, idx: usize, axis: usize, steps: isize) -> Option<usize> {
        let c = self.coords(idx);
        let m = c[axis] as isize + steps;
        if m < 0 || m >= self.n as isize {
            return None;
        }
        let stride = [self.n * self.n, self.n, 1][axis] as isize;
        let j = (idx as isize + steps * stride) as usize;
        self.active[j].then_some(j)
    }

    /// Samples `f` at every cell centre; inactive cells hold `f` too but are never read.
    pub fn sample<T: Send, F: Fn(&Vec3) -> T + Sync + Send>(&self, f: F) -> Vec<T> {
        self.exec.map(self.len(), |i| f(&self.centres[i]))
    }

    /// Derivative along `axis`: centred where both neighbours are active, one-sided
    /// second order at the edge of the active set, first order as a last resort.
    pub fn partial<T>(&self, f: &[T], axis: usize) -> Vec<T>
    where
        T: Copy + Send + Sync + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let h = self.h;
        self.exec.map(self.len(), |i| {
            if !self.active[i] {
                return f[i] * 0.0;
            }
            let nb = |s| self.neighbour(i, axis, s);
            match (nb(-1), nb(1)) {
                (Some(m), Some(p)) => (f[p] - f[m]) * (0.5 / h),
                (None, Some(p)) => match nb(2) {
                    Some(pp) => (f[p] * 4.0 - f[i] * 3.0 - f[pp]) * (0.5 / h),
                    None => (f[p] - f[i]) * (1.0 / h),
                },
                (Some(m), None) => match nb(-2) {
                    Some(mm) => (f[i] * 3.0 - f[m] * 4.0 + f[mm]) * (0.5 / h),
                    None => (f[i] - f[m]) * (1.0 / h),
                },
                (None, None) => f[i] * 0.0,
            }
        })
    }

    pub fn gradient(&self, f: &[f64]) -> Vec<Vec3> {
        let d = [self.partial(f, 0), self.partial(f, 1), self.partial(f, 2)];
        (0..self.len()).map(|i| Vec3::new(d[0][i], d[1][i], d[2][i])).collect()
    }

    /// `G[i](a, s) = d_s F^a`.
    pub fn jacobian(&self, f: &[Vec3]) -> Vec<Mat3> {
        let d = [self.partial(f, 0), self.partial(f, 1), self.partial(f, 2)];
        (0..self.len()).map(|i| Mat3::from_columns(&[d[0][i], d[1][i], d[2][i]])).collect()
    }

    /// `y/r . grad` applied to a field whose Cartesian derivatives are `d`.
    pub fn radial_derivative<T>(&self, d: &[Vec<T>; 3]) -> Vec<T>
    where
        T: Copy + Send + Sync + Add<Output = T> + Mul<f64, Output = T>,
    {
        self.exec.map(self.len(), |i| {
            let r = self.r[i].max(R_MIN);
            let y = self.centres[i] / r;
            d[0][i] * y.x + d[1][i] * y.y + d[2][i] * y.z
        })
    }

    /// Angular derivative `d_a - y_a/r d_r` of a field whose Cartesian derivatives are `d`;
    /// zero below [`R_MIN`].
    pub fn angular<T>(&self, d: &[Vec<T>; 3], a: usize) -> Vec<T>
    where
        T: Copy + Send + Sync + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        self.exec.map(self.len(), |i| {
            if self.r[i] < R_MIN {
                return d[a][i] * 0.0;
            }
            let y = self.centres[i] / self.r[i];
            let dr = d[0][i] * y.x + d[1][i] * y.y + d[2][i] * y.z;
            d[a][i] - dr * y[a]
        })
    }

    pub fn partials<T>(&self, f: &[T]) -> [Vec<T>; 3]
    where
        T: Copy + Send + Sync + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        [self.partial(f, 0), self.partial(f, 1), self.partial(f, 2)]
    }

    /// Midpoint rule for `int phi w^k g dy` over the active cells.
    pub fn integrate(&self, g: &[f64], k: f64, side: Side) -> f64 {
        let list = &self.active_list;
        let s = self.exec.sum(list.len(), |m| {
            let i = list[m];
            side.factor(self.psi[i]) * self.w[i].powf(k) * g[i]
        });
        s * self.h.powi(3)
    }

    /// `int phi w^k |f|^2 dy`.
    pub fn weighted_norm<T: SqNorm + Sync>(&self, f: &[T], k: f64, side: Side) -> f64 {
        let list = &self.active_list;
        let s = self.exec.sum(list.len(), |m| {
            let i = list[m];
            side.factor(self.psi[i]) * self.w[i].powf(k) * f[i].sq_norm()
        });
        s * self.h.powi(3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> GammaParams {
        GammaParams::default()
    }

    #[test]
    fn radial_nodes_are_cell_centred() {
        let g = RadialGrid::new(&p(), 10);
        assert!((g.r[0] - 0.05).abs() < 1e-15 && (g.r[9] - 0.95).abs() < 1e-15);
        assert!(g.w.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn radial_derivative_of_square_is_exact() {
        let g = RadialGrid::new(&p(), 40);
        let f: Vec<f64> = g.r.iter().map(|r| r * r).collect();
        let d = g.d_r(&f, Parity::Even);
        for (x, dx) in g.r.iter().zip(&d) {
            assert!((dx - 2.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_volume_and_mass() {
        let g = RadialGrid::new(&p(), 4000);
        let one = vec![1.0; g.n];
        assert!((g.weighted_norm(&one, 0.0, Side::Both) - 4.0 * PI / 3.0).abs() < 1e-6);
        let mass = 0.2f64.powf(1.5) * PI * PI / 8.0;
        let a = g.weighted_norm(&one, 1.5, Side::Psi) + g.weighted_norm(&one, 1.5, Side::OneMinusPsi);
        assert!((a - mass).abs() < 1e-6);
    }

    #[test]
    fn cartesian_stencil_exact_on_quadratics() {
        let g = CartGrid::new(&p(), 16);
        let f = g.sample(|y| y.x * y.x - 2.0 * y.y * y.z + y.z);
        let d = g.gradient(&f);
        let second_order = |i: usize| {
            (0..3).all(|a| {
                let nb = |s| g.neighbour(i, a, s).is_some();
                (nb(-1) && nb(1)) || (nb(1) && nb(2)) || (nb(-1) && nb(-2))
            })
        };
        let mut fallback = 0;
        for &i in &g.active_list {
            let y = g.centres[i];
            let exact = Vec3::new(2.0 * y.x, -2.0 * y.z, -2.0 * y.y + 1.0);
            let err = (d[i] - exact).norm();
            if second_order(i) {
                assert!(err < 1e-11, "{i} {err}");
            } else {
                fallback += 1;
                assert!(err <= 2.0 * g.h, "{i} {err}");
            }
        }
        assert!(fallback < g.active_list.len() / 20, "{fallback}");
    }

    #[test]
    fn cartesian_volume() {
        let g = CartGrid::new(&p(), 64);
        let one = vec![1.0; g.len()];
        let v = g.integrate(&one, 0.0, Side::Both);
        assert!((v - 4.0 * PI / 3.0).abs() < 2e-2, "{v}");
        assert_eq!(g.weighted_norm(&vec![0.0; g.len()], 1.5, Side::Both), 0.0);
    }

    #[test]
    fn angular_gradient_kills_radial_functions() {
        let g = CartGrid::new(&p(), 24);
        let f = g.sample(|y| y.norm_squared() * y.norm_squared());
        let d = g.partials(&f);
        for a in 0..3 {
            let ang = g.angular(&d, a);
            for &i in &g.active_list {
                if g.r[i] < 0.85 {
                    assert!(ang[i].abs() < 1e-10, "{}", ang[i]);
                }
            }
        }
    }
}
