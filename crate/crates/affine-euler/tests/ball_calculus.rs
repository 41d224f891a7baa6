use affine_euler::ball::commutators::{commutator_suite, TestFields};
use affine_euler::ball::lie::FlowMapDiff;
use affine_euler::ball::{CartGrid, Side};
use affine_euler::eulerian::Vec3;
use affine_euler::{GammaParams, Mat3};
use proptest::prelude::*;

fn grid(n: usize) -> CartGrid {
    CartGrid::new(&GammaParams::default(), n)
}

fn spd(entries: &[f64]) -> Mat3 {
    let m = Mat3::identity() + Mat3::from_fn(|i, j| entries[3 * i + j]);
    let s = m.transpose() * m;
    s / s.determinant().cbrt()
}

fn quadratic_field(g: &CartGrid, c: &[f64], eps: f64) -> Vec<Vec3> {
    g.sample(|y| {
        let m = [y.x, y.y, y.z, y.x * y.y, y.y * y.z, y.z * y.x];
        Vec3::from_fn(|i, _| eps * (0..6).map(|k| c[6 * i + k] * m[k]).sum::<f64>())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn curl_annihilates_lambda_eta(
        c in prop::collection::vec(-1.0..1.0f64, 18),
        l in prop::collection::vec(-0.4..0.4f64, 9),
        eps in 0.0..0.15f64,
    ) {
        let g = grid(10);
        let theta = quadratic_field(&g, &c, eps);
        let lambda = spd(&l);
        let flow = FlowMapDiff::new(&g, &theta).unwrap();
        let eta: Vec<Vec3> = g.centres.iter().zip(&theta).map(|(y, t)| lambda * (y + t)).collect();
        let curl = flow.curl_matrix(&g.jacobian(&eta), &lambda);
        for &i in &g.active_list {
            prop_assert!(curl[i].amax() <= 1e-12, "cell {i}: {}", curl[i].amax());
        }
    }

    #[test]
    fn inverse_jacobian_is_exact(c in prop::collection::vec(-1.0..1.0f64, 18), eps in 0.0..0.15f64) {
        let g = grid(10);
        let flow = FlowMapDiff::new(&g, &quadratic_field(&g, &c, eps)).unwrap();
        prop_assert!(flow.inverse_residual() <= 1e-12);
        prop_assert!(flow.cofactor_residual() <= 1e-12);
        prop_assert!(flow.min_jacobian() > 0.0);
    }

    #[test]
    fn weighted_norm_is_quadratic(c in prop::collection::vec(-1.0..1.0f64, 18), s in -3.0..3.0f64) {
        let g = grid(8);
        let f = quadratic_field(&g, &c, 1.0);
        let scaled: Vec<Vec3> = f.iter().map(|v| v * s).collect();
        let (a, b) = (g.weighted_norm(&f, 1.5, Side::Both), g.weighted_norm(&scaled, 1.5, Side::Both));
        prop_assert!((b - s * s * a).abs() <= 1e-12 * a.max(1.0));
    }
}

#[test]
fn commutator_identities_converge_at_second_order() {
    let rep = commutator_suite(&GammaParams::default(), &TestFields::polynomial(), &[0.02, 0.01, 0.005, 0.0025], 24);
    assert!(!rep.identities.is_empty());
    for id in &rep.identities {
        assert!(id.converges_at(1.85), "{}: {:?}", id.name, id.orders);
    }
    let exact = rep.identities.iter().find(|i| i.name == "[d_i, d_j]").unwrap();
    assert!(exact.exact, "{:?}", exact.residuals);
}

#[test]
fn radial_flow_map_jacobian() {
    let eps = 0.05;
    let errors: Vec<f64> = [16, 32]
        .iter()
        .map(|&n| {
            let g = grid(n);
            let theta = g.sample(|y| *y * (eps * (1.0 - y.norm_squared())));
            let flow = FlowMapDiff::new(&g, &theta).unwrap();
            let mut worst: f64 = 0.0;
            for &i in &g.active_list {
                let r = g.r[i];
                let h = 1.0 + eps * (1.0 - r * r);
                let h_r = -2.0 * eps * r;
                worst = worst.max((flow.j[i] - h * h * (h + r * h_r)).abs());
            }
            worst
        })
        .collect();
    assert!(errors[1] < 2e-3 && errors[1] < errors[0] / 3.0, "{errors:?}");
}

#[test]
fn inverse_jacobian_differentiation_formula() {
    let eps = 0.1;
    let theta_of = |y: &Vec3| Vec3::new(y.y * y.y, y.x * y.z, y.x * y.y) * eps;
    let d_eta = |y: &Vec3| {
        Mat3::identity() + Mat3::new(0.0, 2.0 * y.y, 0.0, y.z, 0.0, y.x, y.y, y.x, 0.0) * eps
    };
    let d2 = [
        Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0) * eps,
        Mat3::new(0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0) * eps,
        Mat3::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0) * eps,
    ];
    let errors: Vec<f64> = [16, 32]
        .iter()
        .map(|&n| {
            let g = grid(n);
            let flow = FlowMapDiff::new(&g, &g.sample(theta_of)).unwrap();
            let mut worst: f64 = 0.0;
            for (axis, dk) in d2.iter().enumerate() {
                let fd = g.partial(&flow.inv_jac, axis);
                for &i in &g.active_list {
                    if g.r[i] > 0.7 {
                        continue;
                    }
                    let a = d_eta(&g.centres[i]).try_inverse().unwrap();
                    worst = worst.max((fd[i] + a * dk * a).amax());
                }
            }
            worst
        })
        .collect();
    assert!(errors[1] < errors[0] / 3.0, "{errors:?}");
}
