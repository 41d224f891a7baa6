//! Pointwise centred-difference operators acting on fields given as closures.
//!
//! Composing them reproduces the grid stencils at any point, which the commutator suite
//! uses to refine `h` without rebuilding grids.

use std::rc::Rc;

use crate::eulerian::Vec3;
use crate::Mat3;

pub type Field = Rc<dyn Fn(&Vec3) -> f64>;

pub fn field<F: Fn(&Vec3) -> f64 + 'static>(f: F) -> Field {
    Rc::new(f)
}

/// Second-order centred stencils with spacing `h`.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub h: f64,
}

impl Stencil {
    pub fn new(h: f64) -> Self {
        Self { h }
    }

    /// `d_i f`.
    pub fn d(&self, f: &Field, i: usize) -> Field {
        let (f, h) = (f.clone(), self.h);
        field(move |y| {
            let mut e = Vec3::zeros();
            e[i] = h;
            (f(&(y + e)) - f(&(y - e))) / (2.0 * h)
        })
    }

    /// `d_r f = (y/r) . grad f`.
    pub fn dr(&self, f: &Field) -> Field {
        let g = [self.d(f, 0), self.d(f, 1), self.d(f, 2)];
        field(move |y| {
            let r = y.norm();
            (y.x * g[0](y) + y.y * g[1](y) + y.z * g[2](y)) / r
        })
    }

    /// Angular gradient `y_j (y_j d_i - y_i d_j) / r^2`.
    pub fn ang(&self, f: &Field, i: usize) -> Field {
        let g = [self.d(f, 0), self.d(f, 1), self.d(f, 2)];
        field(move |y| {
            let r2 = y.norm_squared();
            let grad = Vec3::new(g[0](y), g[1](y), g[2](y));
            grad[i] - y[i] * y.dot(&grad) / r2
        })
    }

    /// Pointwise `D f` of a vector field given by three components.
    pub fn jacobian_at(&self, f: &[Field; 3], y: &Vec3) -> Mat3 {
        Mat3::from_fn(|a, s| self.d(&f[a], s)(y))
    }
}

/// Pointwise product `a * b`.
pub fn mul(a: &Field, b: &Field) -> Field {
    let (a, b) = (a.clone(), b.clone());
    field(move |y| a(y) * b(y))
}

pub fn add(a: &Field, b: &Field) -> Field {
    let (a, b) = (a.clone(), b.clone());
    field(move |y| a(y) + b(y))
}

pub fn sub(a: &Field, b: &Field) -> Field {
    let (a, b) = (a.clone(), b.clone());
    field(move |y| a(y) - b(y))
}

/// Multiplication by a known coefficient function.
pub fn scale<C: Fn(&Vec3) -> f64 + 'static>(c: C, a: &Field) -> Field {
    let a = a.clone();
    field(move |y| c(y) * a(y))
}
