//! Discrete residuals of the vector-field commutator identities, the weighted divergence
//! commutators and the differentiation formulas for the inverse Jacobian.

use serde::{Deserialize, Serialize};

use super::stencil::{field, scale, Field, Stencil};
use crate::eulerian::Vec3;
use crate::params::GammaParams;
use crate::Mat3;

/// Below this residual (relative to the field scale) an identity counts as exact.
pub const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub name: String,
    /// Sup-norm residual per ladder level.
    pub residuals: Vec<f64>,
    /// `log2` ratios between consecutive levels.
    pub orders: Vec<f64>,
    /// All residuals below [`EXACT_TOL`].
    pub exact: bool,
}

impl IdentityResidual {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Exact, or converging at least at `order` between every pair of levels.
    pub fn converges_at(&self, order: f64) -> bool {
        self.exact || self.min_order() >= order
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub hs: Vec<f64>,
    pub points: usize,
    pub identities: Vec<IdentityResidual>,
}

/// Polynomial data the identities are evaluated on.
#[derive(Clone)]
pub struct TestFields {
    pub f: Field,
    /// `t[k][i]` is the tensor entry `T^k_i`.
    pub t: [[Field; 3]; 3],
    pub theta: [Field; 3],
}

impl TestFields {
    pub fn polynomial() -> Self {
        let f = field(|y| y.x * y.y * y.y + y.x.powi(3) * y.z);
        let t = std::array::from_fn(|k| {
            std::array::from_fn(|i| {
                let (k1, i1) = (k as f64 + 1.0, i as f64 + 1.0);
                field(move |y: &Vec3| {
                    k1 * y[i] * y[k] * y[k] + y[(i + k) % 3].powi(3) * 0.5 - i1 * y[(k + 1) % 3] * y[i] + 0.2 * k1
                })
            })
        });
        let theta = [
            field(|y| 0.1 * (y.x * y.y * y.y + 0.5 * y.z)),
            field(|y| 0.1 * (y.y * y.z + y.x * y.x - 0.3 * y.x * y.y * y.z)),
            field(|y| 0.1 * (y.z * y.x * y.x - 0.2 * y.y.powi(3))),
        ];
        Self { f, t, theta }
    }
}

/// Deterministic sample points in the shell `0.3 <= r <= 0.9`.
pub fn sample_points(count: usize) -> Vec<Vec3> {
    let golden = 0.5 * (1.0 + 5f64.sqrt());
    (0..count)
        .map(|k| {
            let kf = k as f64 + 0.5;
            let z = 1.0 - 2.0 * kf / count as f64;
            let phi = 2.0 * std::f64::consts::PI * kf / golden;
            let s = (1.0 - z * z).sqrt();
            let r = 0.3 + 0.6 * (kf / golden).fract();
            Vec3::new(s * phi.cos(), s * phi.sin(), z) * r
        })
        .collect()
}

type Check = Box<dyn Fn(&Stencil, &Vec3) -> f64>;

fn radial_unit(y: &Vec3, i: usize) -> f64 {
    y[i] / y.norm()
}

fn triangle(y: &Vec3, i: usize, j: usize) -> f64 {
    let r = y.norm();
    (y[i] * y[j] - if i == j { r * r } else { 0.0 }) / r.powi(3)
}

fn inv_jacobian(s: &Stencil, theta: &[Field; 3]) -> [[Field; 3]; 3] {
    let s = *s;
    let theta = theta.clone();
    let a = move |y: &Vec3| {
        (Mat3::identity() + s.jacobian_at(&theta, y)).try_inverse().expect("admissible theta")
    };
    let a = std::rc::Rc::new(a);
    std::array::from_fn(|k| {
        std::array::from_fn(|i| {
            let a = a.clone();
            field(move |y| a(y)[(k, i)])
        })
    })
}

fn checks(params: &GammaParams, data: &TestFields) -> Vec<(String, Check)> {
    let c = params.w_scale();
    let q = params.alpha;
    let w = move |y: &Vec3| c * (1.0 - y.norm_squared());
    let mut out: Vec<(String, Check)> = Vec::new();

    let f = data.f.clone();
    out.push((
        "[d_r, d_i] + (1/r) ang_i".into(),
        Box::new(move |s, y| {
            (0..3)
                .map(|i| {
                    let lhs = s.dr(&s.d(&f, i))(y) - s.d(&s.dr(&f), i)(y);
                    (lhs + s.ang(&f, i)(y) / y.norm()).abs()
                })
                .fold(0.0, f64::max)
        }),
    ));
    let f = data.f.clone();
    out.push((
        "[d_r, ang_i] + (1/r) ang_i".into(),
        Box::new(move |s, y| {
            (0..3)
                .map(|i| {
                    let lhs = s.dr(&s.ang(&f, i))(y) - s.ang(&s.dr(&f), i)(y);
                    (lhs + s.ang(&f, i)(y) / y.norm()).abs()
                })
                .fold(0.0, f64::max)
        }),
    ));
    let f = data.f.clone();
    out.push((
        "[d_i, d_j]".into(),
        Box::new(move |s, y| {
            let mut m: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    m = m.max((s.d(&s.d(&f, j), i)(y) - s.d(&s.d(&f, i), j)(y)).abs());
                }
            }
            m
        }),
    ));
    let f = data.f.clone();
    out.push((
        "[ang_i, ang_j]".into(),
        Box::new(move |s, y| {
            let r2 = y.norm_squared();
            let mut m: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let lhs = s.ang(&s.ang(&f, j), i)(y) - s.ang(&s.ang(&f, i), j)(y);
                    let rhs = (y[i] * s.ang(&f, j)(y) - y[j] * s.ang(&f, i)(y)) / r2;
                    m = m.max((lhs - rhs).abs());
                }
            }
            m
        }),
    ));
    let f = data.f.clone();
    out.push((
        "[d_i, ang_j]".into(),
        Box::new(move |s, y| {
            let r2 = y.norm_squared();
            let mut m: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let lhs = s.d(&s.ang(&f, j), i)(y) - s.ang(&s.d(&f, i), j)(y);
                    let rhs = -y[j] * s.ang(&f, i)(y) / r2 + triangle(y, i, j) * s.dr(&f)(y);
                    m = m.max((lhs - rhs).abs());
                }
            }
            m
        }),
    ));
    let f = data.f.clone();
    out.push((
        "[d_r ang_i, d_j]".into(),
        Box::new(move |s, y| {
            let mut m: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let lhs = s.dr(&s.ang(&s.d(&f, j), i))(y) - s.d(&s.dr(&s.ang(&f, i)), j)(y);
                    let (fa, fb) = (f.clone(), f.clone());
                    let (aj, dr) = (s.ang(&fa, j), s.dr(&fb));
                    let inner = field(move |p: &Vec3| p[i] * aj(p) / p.norm_squared() - triangle(p, j, i) * dr(p));
                    let rhs = s.dr(&inner)(y) - s.ang(&s.ang(&f, i), j)(y) / y.norm();
                    m = m.max((lhs - rhs).abs());
                }
            }
            m
        }),
    ));

    let t = data.t.clone();
    out.push((
        "Commr".into(),
        Box::new(move |s, y| {
            let mut m: f64 = 0.0;
            for i in 0..3 {
                let mut inner = Vec::new();
                let mut rhs_flux = Vec::new();
                for k in 0..3 {
                    let wt = scale(move |p| w(p).powf(1.0 + q), &t[k][i]);
                    inner.push(s.d(&wt, k));
                    let wdr = scale(move |p| w(p).powf(2.0 + q), &s.dr(&t[k][i]));
                    rhs_flux.push(s.d(&wdr, k));
                }
                let div = field(move |p| (inner[0](p) + inner[1](p) + inner[2](p)) / w(p).powf(q));
                let lhs = s.dr(&div)(y);
                let r = y.norm();
                let dr_w = -2.0 * c * r;
                let mut rhs = (rhs_flux[0](y) + rhs_flux[1](y) + rhs_flux[2](y)) / w(y).powf(1.0 + q);
                for k in 0..3 {
                    rhs += (dr_w - w(y) / r) * s.ang(&t[k][i], k)(y);
                    rhs += (1.0 + q) * (-2.0 * c * y[k] / r) * t[k][i](y);
                }
                m = m.max((lhs - rhs).abs());
            }
            m
        }),
    ));
    let t = data.t.clone();
    out.push((
        "Commphi".into(),
        Box::new(move |s, y| {
            let mut m: f64 = 0.0;
            let r = y.norm();
            for i in 0..3 {
                let inner: Vec<Field> =
                    (0..3).map(|k| s.d(&scale(move |p| w(p).powf(1.0 + q), &t[k][i]), k)).collect();
                let div = field(move |p| (inner[0](p) + inner[1](p) + inner[2](p)) / w(p).powf(q));
                for j in 0..3 {
                    let lhs = s.ang(&div, j)(y);
                    let mut rhs = 0.0;
                    for k in 0..3 {
                        let flux = scale(move |p| w(p).powf(1.0 + q), &s.ang(&t[k][i], j));
                        rhs += s.d(&flux, k)(y) / w(y).powf(q);
                        let kj = if k == j { r * r } else { 0.0 };
                        rhs += w(y)
                            * (y[j] * s.ang(&t[k][i], k)(y) / (r * r)
                                + (kj - y[k] * y[j]) / r.powi(3) * s.dr(&t[k][i])(y));
                        let ang_wk = -2.0 * c * (if k == j { 1.0 } else { 0.0 } - radial_unit(y, j) * radial_unit(y, k));
                        rhs += (1.0 + q) * ang_wk * t[k][i](y);
                    }
                    m = m.max((lhs - rhs).abs());
                }
            }
            m
        }),
    ));

    let theta = data.theta.clone();
    out.push((
        "d_r A".into(),
        Box::new(move |s, y| {
            let a = inv_jacobian(s, &theta);
            let av = Mat3::from_fn(|k, i| a[k][i](y));
            let r = y.norm();
            let dr_theta: Vec<Field> = theta.iter().map(|th| s.dr(th)).collect();
            let grad_dr = Mat3::from_fn(|sx, mx| s.d(&dr_theta[sx], mx)(y));
            let comm = Mat3::from_fn(|sx, mx| s.ang(&theta[sx], mx)(y) / r);
            let rhs = -av * grad_dr * av + av * comm * av;
            let lhs = Mat3::from_fn(|k, i| s.dr(&a[k][i])(y));
            (lhs - rhs).amax()
        }),
    ));
    let theta = data.theta.clone();
    out.push((
        "ang_j A".into(),
        Box::new(move |s, y| {
            let a = inv_jacobian(s, &theta);
            let av = Mat3::from_fn(|k, i| a[k][i](y));
            let r2 = y.norm_squared();
            let mut m: f64 = 0.0;
            for j in 0..3 {
                let ang_theta: Vec<Field> = theta.iter().map(|th| s.ang(th, j)).collect();
                let grad_ang = Mat3::from_fn(|sx, mx| s.d(&ang_theta[sx], mx)(y));
                let comm = Mat3::from_fn(|sx, mx| {
                    -y[j] * s.ang(&theta[sx], mx)(y) / r2 + triangle(y, mx, j) * s.dr(&theta[sx])(y)
                });
                let rhs = -av * grad_ang * av + av * comm * av;
                let lhs = Mat3::from_fn(|k, i| s.ang(&a[k][i], j)(y));
                m = m.max((lhs - rhs).amax());
            }
            m
        }),
    ));
    out
}

/// Evaluates every identity at `points` sample points for each spacing in `hs`.
pub fn commutator_suite(params: &GammaParams, data: &TestFields, hs: &[f64], points: usize) -> CommutatorReport {
    let pts = sample_points(points);
    let identities = checks(params, data)
        .into_iter()
        .map(|(name, check)| {
            let residuals: Vec<f64> = hs
                .iter()
                .map(|&h| {
                    let s = Stencil::new(h);
                    pts.iter().map(|y| check(&s, y)).fold(0.0, f64::max)
                })
                .collect();
            let orders = residuals.windows(2).zip(hs.windows(2)).map(|(r, h)| (r[0] / r[1]).ln() / (h[0] / h[1]).ln()).collect();
            let exact = residuals.iter().all(|r| *r <= EXACT_TOL);
            IdentityResidual { name, residuals, orders, exact }
        })
        .collect();
    CommutatorReport { hs: hs.to_vec(), points, identities }
}
