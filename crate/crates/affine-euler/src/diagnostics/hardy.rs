//! Hardy inequalities near `r = 1` and the weighted Sobolev embedding, evaluated on
//! polynomial test functions with Gauss quadrature graded towards the boundary.
//!
//! Every inequality `lhs <= C rhs` is reported through its empirical constant `lhs / rhs`,
//! computed at `m` and `4 m` nodes per panel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ball::psi;
use crate::params::GammaParams;
use crate::quad::gauss_legendre_on;

/// Relative change of a constant under refinement accepted as stable.
pub const STABLE_TOL: f64 = 1e-6;

/// Dense polynomial in `r`, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, r: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    pub fn deriv(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    pub fn nth_deriv(&self, n: usize) -> Poly {
        (0..n).fold(self.clone(), |p, _| p.deriv())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyCase {
    pub kind: String,
    pub function: String,
    pub k: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub constant_refined: f64,
    pub finite: bool,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub cases: Vec<HardyCase>,
    pub all_finite: bool,
    pub all_stable: bool,
}

/// Integral over `s = 1 - r` in `(0, 1)` on panels graded geometrically towards `s = 0` and
/// split at the edges of the cutoff transition.
fn integrate_s<F: Fn(f64) -> f64>(f: &F, m: usize) -> f64 {
    let mut breaks = vec![0.0];
    breaks.extend((0..=48).rev().map(|j| 0.25 * 0.5f64.powi(j)));
    breaks.extend([0.375, 0.5, 0.625, 0.75, 0.875, 1.0]);
    breaks
        .windows(2)
        .map(|ab| {
            let (x, w) = gauss_legendre_on(m, ab[0], ab[1]);
            x.iter().zip(&w).map(|(s, w)| w * f(*s)).sum::<f64>()
        })
        .sum()
}

fn family_1d() -> Vec<(&'static str, Poly)> {
    vec![
        ("1-r", Poly(vec![1.0, -1.0])),
        ("1", Poly(vec![1.0])),
        ("(1-r)^2", Poly(vec![1.0, -2.0, 1.0])),
        ("1/2+r^2-r^4", Poly(vec![0.5, 0.0, 1.0, 0.0, -1.0])),
        ("r(1-r)^2", Poly(vec![0.0, 1.0, -2.0, 1.0])),
    ]
}

fn family_ball() -> Vec<(&'static str, Poly)> {
    vec![
        ("1", Poly(vec![1.0])),
        ("1-r^2", Poly(vec![1.0, 0.0, -1.0])),
        ("(1-r^2)^2", Poly(vec![1.0, 0.0, -2.0, 0.0, 1.0])),
        ("1/2+r^2-r^4", Poly(vec![0.5, 0.0, 1.0, 0.0, -1.0])),
    ]
}

/// Squared Frobenius norms of the Cartesian derivatives of orders 1, 2 and 3 of the radial
/// function with radial derivatives `f1, f2, f3` at radius `r`.
fn cartesian_derivative_norms(r: f64, f1: f64, f2: f64, f3: f64) -> [f64; 3] {
    let g = f1 / r;
    let g_r = (f2 - g) / r;
    let h = f2 - g;
    let h_r = f3 - g_r;
    let n = [0.0, 0.0, 1.0];
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let mut third = 0.0;
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let t = g_r * n[k] * delta(i, j)
                    + h_r * n[i] * n[j] * n[k]
                    + h / r * ((delta(i, k) - n[i] * n[k]) * n[j] + n[i] * (delta(j, k) - n[j] * n[k]));
                third += t * t;
            }
        }
    }
    [f1 * f1, f2 * f2 + 2.0 * g * g, third]
}

struct Case {
    kind: &'static str,
    function: &'static str,
    k: f64,
    sides: Box<dyn Fn(usize) -> (f64, f64)>,
}

fn cases(params: &GammaParams, ks: &[f64]) -> Vec<Case> {
    let p = *params;
    let w = move |r: f64| p.w_of_r2(r * r);
    let mut out = Vec::new();
    for (name, g) in family_1d() {
        let dg = g.deriv();
        for &k in ks {
            let (g, dg) = (g.clone(), dg.clone());
            if k > -1.0 {
                out.push(Case {
                    kind: "hardy_1d",
                    function: name,
                    k,
                    sides: Box::new(move |m| {
                        let lhs = integrate_s(&|s| s.powf(k) * g.eval(1.0 - s).powi(2), m);
                        let rhs = integrate_s(
                            &|s| s.powf(k + 2.0) * (g.eval(1.0 - s).powi(2) + dg.eval(1.0 - s).powi(2)),
                            m,
                        );
                        (lhs, rhs)
                    }),
                });
            } else if k < -1.0 {
                let g1 = g.eval(1.0);
                out.push(Case {
                    kind: "hardy_1d_trace",
                    function: name,
                    k,
                    sides: Box::new(move |m| {
                        let lhs = integrate_s(&|s| s.powf(k) * (g.eval(1.0 - s) - g1).powi(2), m);
                        let rhs = integrate_s(&|s| s.powf(k + 2.0) * dg.eval(1.0 - s).powi(2), m);
                        (lhs, rhs)
                    }),
                });
            }
        }
    }
    let shell = move |f: &dyn Fn(f64) -> f64, k: f64, m: usize| {
        4.0 * PI * integrate_s(&|s| {
            let r = 1.0 - s;
            psi(r) * w(r).powf(k) * r * r * f(r)
        }, m)
    };
    let cartesian = move |f: &dyn Fn(f64) -> f64, k: f64, m: usize| {
        4.0 * PI * integrate_s(&|s| {
            let r = 1.0 - s;
            (1.0 - psi(r)) * w(r).powf(k) * r * r * f(r)
        }, m)
    };
    for (name, u) in family_ball() {
        for &k in ks.iter().filter(|k| **k >= 0.0) {
            let u1 = u.clone();
            out.push(Case {
                kind: "hardy_shell",
                function: name,
                k,
                sides: Box::new(move |m| {
                    let du = u1.deriv();
                    let lhs = shell(&|r| u1.eval(r).powi(2), k, m);
                    let rhs = shell(&|r| du.eval(r).powi(2) + u1.eval(r).powi(2), k + 2.0, m);
                    (lhs, rhs)
                }),
            });
            if k < p.alpha {
                let u2 = u.clone();
                let top = (p.alpha - k).ceil() as usize;
                out.push(Case {
                    kind: "hardy_iterated",
                    function: name,
                    k,
                    sides: Box::new(move |m| {
                        let lhs = shell(&|r| u2.eval(r).powi(2), k, m);
                        let rhs = (0..=top)
                            .map(|j| {
                                let dj = u2.nth_deriv(j);
                                shell(&|r| dj.eval(r).powi(2), p.alpha + j as f64, m)
                            })
                            .sum();
                        (lhs, rhs)
                    }),
                });
            }
        }
        let top = p.alpha.ceil() as usize + 6;
        let samples: Vec<f64> = (0..=3000).map(|i| 0.25 + 0.75 * i as f64 / 3000.0).collect();
        let u3 = u.clone();
        let sup0 = samples.iter().map(|r| u3.eval(*r).abs()).fold(0.0, f64::max);
        let du3 = u.deriv();
        let sup1 = samples.iter().map(|r| du3.eval(*r).abs()).fold(0.0, f64::max);
        out.push(Case {
            kind: "embedding_sup",
            function: name,
            k: p.alpha,
            sides: Box::new(move |m| {
                let mut rhs = 0.0;
                for a in 0..=top {
                    let da = u3.nth_deriv(a);
                    rhs += shell(&|r| da.eval(r).powi(2), a as f64 + p.alpha, m).sqrt();
                }
                let (d1, d2, d3) = (u3.deriv(), u3.nth_deriv(2), u3.nth_deriv(3));
                let cart = |r: f64| cartesian_derivative_norms(r, d1.eval(r), d2.eval(r), d3.eval(r));
                rhs += cartesian(&|r| u3.eval(r).powi(2), p.alpha, m).sqrt();
                rhs += cartesian(&|r| cart(r)[0], p.alpha, m).sqrt();
                rhs += cartesian(&|r| cart(r)[1], p.alpha, m).sqrt();
                (sup0, rhs)
            }),
        });
        let u4 = u.clone();
        out.push(Case {
            kind: "embedding_sup_gradient",
            function: name,
            k: p.alpha + 1.0,
            sides: Box::new(move |m| {
                let mut rhs = 0.0;
                for a in 0..=top {
                    let da1 = u4.nth_deriv(a + 1);
                    rhs += shell(&|r| da1.eval(r).powi(2), a as f64 + p.alpha + 1.0, m).sqrt();
                }
                let (d1, d2, d3) = (u4.deriv(), u4.nth_deriv(2), u4.nth_deriv(3));
                let cart = |r: f64| cartesian_derivative_norms(r, d1.eval(r), d2.eval(r), d3.eval(r));
                for j in 0..3 {
                    rhs += cartesian(&|r| cart(r)[j], p.alpha + 1.0, m).sqrt();
                }
                (sup1, rhs)
            }),
        });
    }
    out
}

/// Evaluates every inequality of the test family for the weight powers `ks` with `m` and
/// `4 m` Gauss nodes per panel.
pub fn hardy_and_embedding_check(params: &GammaParams, ks: &[f64], m: usize) -> HardyReport {
    let cases: Vec<HardyCase> = cases(params, ks)
        .into_iter()
        .map(|c| {
            let (lhs, rhs) = (c.sides)(m);
            let (lhs4, rhs4) = (c.sides)(4 * m);
            let ratio = |l: f64, r: f64| if l == 0.0 { 0.0 } else { l / r };
            let constant = ratio(lhs, rhs);
            let constant_refined = ratio(lhs4, rhs4);
            let finite = lhs.is_finite() && rhs.is_finite() && constant.is_finite() && constant_refined.is_finite();
            let stable = (constant_refined - constant).abs() <= STABLE_TOL * constant_refined.abs().max(1e-300)
                || constant == constant_refined;
            HardyCase {
                kind: c.kind.into(),
                function: c.function.into(),
                k: c.k,
                lhs: lhs4,
                rhs: rhs4,
                constant,
                constant_refined,
                finite,
                stable,
            }
        })
        .collect();
    let all_finite = cases.iter().all(|c| c.finite);
    let all_stable = cases.iter().all(|c| c.stable);
    HardyReport { cases, all_finite, all_stable }
}
