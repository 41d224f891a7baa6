use std::f64::consts::PI;

use affine_euler::ball::{CartGrid, RadialGrid, Side};
use affine_euler::diagnostics::{
    eigen_term, energy_and_dissipation, hardy_and_embedding_check, key_lemma_check, norm_energy_interval,
    radial_report, random_path, s_norm, weighted_norm, Chart, CurlTransport, DiagError, EnergyGuard,
};
use affine_euler::eulerian::Vec3;
use affine_euler::perturb::conformal_to_tau;
use affine_euler::{derived_frame, DerivedFrame, GammaParams, Mat3};

fn identity_frame(p: &GammaParams) -> DerivedFrame {
    derived_frame(p, &Mat3::identity(), &Mat3::zeros()).unwrap()
}

fn expanding_frame(p: &GammaParams) -> DerivedFrame {
    let st = conformal_to_tau(p, 1.5, 1e-12).unwrap().state_at_tau(1.0).unwrap();
    derived_frame(p, &st.a, &st.a_dot).unwrap()
}

fn smooth_fields(g: &CartGrid, eps: f64) -> (Vec<Vec3>, Vec<Vec3>) {
    let theta = g.sample(|y| Vec3::new(y.y * y.z, y.x + 0.3 * y.z * y.z, y.x * y.y) * eps);
    let v = g.sample(|y| Vec3::new(-y.y, y.x + y.z * y.x, 0.2 * y.z) * eps);
    (theta, v)
}

#[test]
fn weighted_norm_examples() {
    let p = GammaParams::default();
    let g = RadialGrid::new(&p, 4096);
    let one = vec![1.0; g.n];
    assert!((g.weighted_norm(&one, 0.0, Side::Both) - 4.0 * PI / 3.0).abs() < 1e-6);
    let mass = g.weighted_norm(&one, p.alpha, Side::Both);
    assert!((mass - 0.1103).abs() < 1e-4, "{mass}");
    assert_eq!(g.weighted_norm(&vec![0.0; g.n], p.alpha, Side::Both), 0.0);
    let c = CartGrid::new(&p, 16);
    assert_eq!(weighted_norm(&c, &vec![Vec3::zeros(); c.len()], p.alpha, Side::Psi), 0.0);
}

#[test]
fn norm_of_dilation() {
    let p = GammaParams::default();
    let g = CartGrid::new(&p, 32);
    let eps = 1e-2;
    let theta = g.sample(|y| *y * eps);
    let rep = s_norm(&g, 0.0, &theta, &vec![Vec3::zeros(); g.len()], &identity_frame(&p), 0, Chart::Identity).unwrap();
    let total: f64 = rep.entries.iter().map(|e| e.theta).sum();
    let r = RadialGrid::new(&p, 4096);
    let r2: Vec<f64> = r.r.iter().map(|x| x * x).collect();
    let oracle = eps * eps * r.integrate(&r2, p.alpha, Side::Both);
    assert!((total - oracle).abs() < 0.05 * oracle, "{total} {oracle}");
    assert_eq!(rep.b_v, 0.0);
}

#[test]
fn zero_fields_have_zero_functionals() {
    let p = GammaParams::new(1.4, 1.0).unwrap();
    let g = CartGrid::new(&p, 12);
    let z = vec![Vec3::zeros(); g.len()];
    for n in 0..=2 {
        let rep = s_norm(&g, 0.5, &z, &z, &expanding_frame(&p), n, Chart::FlowMap).unwrap();
        assert_eq!((rep.s, rep.e, rep.d), (0.0, 0.0, 0.0));
        assert!(!rep.theorem_order_reached);
    }
}

#[test]
fn quadratic_homogeneity_in_linear_mode() {
    let p = GammaParams::new(1.4, 1.0).unwrap();
    let g = CartGrid::new(&p, 16);
    let frame = expanding_frame(&p);
    let (theta, v) = smooth_fields(&g, 1.0);
    let c = 3.0;
    let scale = |f: &[Vec3]| f.iter().map(|x| x * c).collect::<Vec<_>>();
    for n in 0..=2 {
        let a = s_norm(&g, 1.0, &theta, &v, &frame, n, Chart::Identity).unwrap();
        let b = s_norm(&g, 1.0, &scale(&theta), &scale(&v), &frame, n, Chart::Identity).unwrap();
        assert!((b.s - c * c * a.s).abs() < 1e-12 * b.s, "order {n}");
        assert!((b.e - c * c * a.e).abs() < 1e-12 * b.e, "order {n}");
    }
}

#[test]
fn evaluation_is_deterministic() {
    let p = GammaParams::default();
    let g = CartGrid::new(&p, 16);
    let (theta, v) = smooth_fields(&g, 1e-2);
    let f = expanding_frame(&p);
    let a = s_norm(&g, 1.0, &theta, &v, &f, 2, Chart::FlowMap).unwrap();
    let b = s_norm(&g, 1.0, &theta, &v, &f, 2, Chart::FlowMap).unwrap();
    assert_eq!(a, b);
}

#[test]
fn order_and_length_errors() {
    let p = GammaParams::default();
    let g = CartGrid::new(&p, 8);
    let z = vec![Vec3::zeros(); g.len()];
    let f = identity_frame(&p);
    assert!(matches!(s_norm(&g, 0.0, &z, &z, &f, 3, Chart::Identity), Err(DiagError::OrderTooHigh(3))));
    assert!(matches!(s_norm(&g, 0.0, &z[1..], &z, &f, 0, Chart::Identity), Err(DiagError::Length { .. })));
    let r = RadialGrid::new(&p, 16);
    let zr = vec![0.0; 16];
    assert!(matches!(radial_report(&r, 0.0, &zr, &zr, &f, 1, Chart::Identity), Err(DiagError::RadialOrder(1))));
}

#[test]
fn dissipation_prefactor_signs() {
    let v_sign = |gamma: f64| {
        let p = GammaParams::new(gamma, 1.0).unwrap();
        let g = RadialGrid::new(&p, 256);
        let theta: Vec<f64> = g.r.iter().map(|r| 1e-3 * r * (1.0 - r * r)).collect();
        let v: Vec<f64> = g.r.iter().map(|r| 1e-3 * r).collect();
        radial_report(&g, 1.0, &theta, &v, &expanding_frame(&p), 0, Chart::FlowMap).unwrap().d
    };
    assert!(v_sign(2.0) < 0.0);
    assert!(v_sign(4.0 / 3.0) > 0.0);
    assert_eq!(v_sign(5.0 / 3.0), 0.0);
}

#[test]
fn eigen_term_reduces_to_frobenius_for_identity_lambda() {
    let p = GammaParams::default();
    let f = identity_frame(&p);
    for k in 0..20 {
        let m = Mat3::from_fn(|i, j| ((3 * i + j + k) as f64 * 0.7).sin());
        assert!((eigen_term(&m, &f) - m.norm_squared()).abs() < 1e-12);
    }
}

#[test]
fn cartesian_and_radial_energy_agree() {
    let p = GammaParams::default();
    let frame = expanding_frame(&p);
    let prof = |r: f64| 1e-3 * r * (1.0 - r * r);
    let rg = RadialGrid::new(&p, 2048);
    let th: Vec<f64> = rg.r.iter().map(|&r| prof(r)).collect();
    let v: Vec<f64> = rg.r.iter().map(|&r| 0.5 * prof(r)).collect();
    let radial = radial_report(&rg, 1.0, &th, &v, &frame, 0, Chart::Identity).unwrap();
    let g = CartGrid::new(&p, 48);
    let th3 = g.sample(|y| *y * (1e-3 * (1.0 - y.norm_squared())));
    let v3: Vec<Vec3> = th3.iter().map(|x| x * 0.5).collect();
    let (e, d) = energy_and_dissipation(&g, 1.0, &th3, &v3, &frame, 0, Chart::Identity).unwrap();
    assert!((e - radial.e).abs() < 0.1 * radial.e, "{e} {}", radial.e);
    assert_eq!(d, 0.0);
}

#[test]
fn energy_guard_and_interval() {
    let mut guard = EnergyGuard::new(10.0);
    assert!(guard.check(0.0, 1.0).is_ok());
    assert!(guard.check(1.0, 9.0).is_ok());
    assert!(guard.check(2.0, 11.0).is_err());
    assert!(guard.check(3.0, f64::NAN).is_err());
    let (lo, hi, spread) = norm_energy_interval(&[(1.0, 2.0), (3.0, 2.0), (1.0, 0.0)]).unwrap();
    assert_eq!((lo, hi, spread), (0.5, 1.5, 3.0));
    assert!(norm_energy_interval(&[(1.0, 0.0)]).is_none());
}

#[test]
fn key_lemma_examples() {
    let taus: Vec<f64> = (0..11).map(|i| 0.2 * i as f64).collect();
    let path = random_path(7);
    let zero = key_lemma_check(|_| Mat3::zeros(), |t| path.lambda_at(t), &taus, 1e-3).unwrap();
    assert_eq!((zero.max_residual, zero.max_lhs), (0.0, 0.0));
    let b = Mat3::from_fn(|i, j| (i as f64 - j as f64) + 0.3 * (i * j) as f64);
    let lam = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 0.5));
    let lin = key_lemma_check(|t| b * t, |_| lam, &taus, 1e-3).unwrap();
    assert!(lin.max_residual < 1e-9, "{}", lin.max_residual);
    for seed in 0..5 {
        let path = random_path(seed);
        let r = key_lemma_check(|t| path.m_at(t), |t| path.lambda_at(t), &taus, 1e-3).unwrap();
        assert!(r.max_residual <= 1e-6 && r.max_lhs > 0.0);
    }
    let crossing = key_lemma_check(|t| b * t, |_| Mat3::identity(), &taus, 1e-3);
    assert!(matches!(crossing, Err(DiagError::EigenCrossing { .. })));
    assert!(key_lemma_check(|t| b * t, |_| lam, &taus, 0.0).is_err());
}

#[test]
fn curl_transport_of_zero_and_radial_fields() {
    let p = GammaParams::default();
    let g = CartGrid::new(&p, 16);
    let bg = conformal_to_tau(&p, 2.5, 1e-12).unwrap();
    let mut zero = CurlTransport::new(&g);
    let mut radial = CurlTransport::new(&g);
    let mut grad = Vec::new();
    for k in 0..=10 {
        let tau = 0.2 * k as f64;
        let frame = bg.frame_at_tau(tau).unwrap();
        zero.push(tau, &vec![Vec3::zeros(); g.len()], &frame);
        let amp = 1e-3 * (-tau).exp();
        let v = g.sample(|y| *y * (amp * (1.0 - y.norm_squared())));
        grad.push(g.weighted_norm(&g.jacobian(&v), p.alpha + 1.0, Side::Both));
        radial.push(tau, &v, &frame);
    }
    let z = zero.report(2.0);
    assert!(z.residuals.iter().all(|r| *r == 0.0) && z.b_v.iter().all(|b| *b == 0.0));
    let r = radial.report(2.0);
    assert!(r.b_v.iter().zip(&grad).all(|(b, d)| *b < 1e-6 * d), "{:?}", r.b_v);
    assert!(r.residuals.iter().all(|x| x * x < 1e-6 * grad[0]));
}

#[test]
fn hardy_examples() {
    let p = GammaParams::default();
    let rep = hardy_and_embedding_check(&p, &[0.0, 1.0, -0.5, -1.5], 8);
    assert!(rep.all_finite && rep.all_stable);
    let case = |kind: &str, f: &str, k: f64| rep.cases.iter().find(|c| c.kind == kind && c.function == f && c.k == k).unwrap();
    assert!((case("hardy_1d", "1-r", 0.0).lhs - 1.0 / 3.0).abs() < 1e-12);
    let c = case("hardy_1d", "1", 1.0);
    assert!((c.lhs - 0.5).abs() < 1e-12 && c.constant.is_finite());
    let c = case("hardy_1d", "(1-r)^2", -0.5);
    assert!(c.lhs < c.rhs * c.constant_refined * (1.0 + 1e-12) && c.constant < 10.0);
    assert!(rep.cases.iter().any(|c| c.kind == "hardy_1d_trace"));
    assert!(rep.cases.iter().all(|c| c.kind != "hardy_shell" || c.k >= 0.0));
}
