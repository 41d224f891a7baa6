use affine_euler::ball::{CartGrid, RadialGrid, Side};
use affine_euler::eulerian::Vec3;
use affine_euler::perturb::{
    attractor_estimate, cartesian_attractor, conformal_to_tau, decay_fit, radial_attractor, solve_linear3d,
    solve_radial, trajectory_to_tau, SolverConfig, SolverError,
};
use affine_euler::{AffineTrajectory, Exec, GammaParams, Mat3};

fn conformal(tau_end: f64) -> AffineTrajectory {
    conformal_to_tau(&GammaParams::default(), tau_end, 1e-12).unwrap()
}

fn anisotropic(tau_end: f64) -> AffineTrajectory {
    let p = GammaParams::new(1.4, 1.0).unwrap();
    let a0 = Mat3::from_diagonal(&Vec3::new(1.2, 1.0, 1.0 / 1.2));
    trajectory_to_tau(&p, &a0, &Mat3::identity(), tau_end, 1e-12).unwrap()
}

fn profile(grid: &RadialGrid, amp: f64) -> Vec<f64> {
    grid.r.iter().map(|r| amp * r * (1.0 - r * r)).collect()
}

fn short(tau_end: f64) -> SolverConfig {
    SolverConfig { tau_end, output_every: 0.25, store_every: 0.25, max_dt: 0.02, ..Default::default() }
}

#[test]
fn zero_data_is_a_steady_state() {
    let bg = conformal(2.5);
    let rg = RadialGrid::new(bg.params(), 128);
    let z = vec![0.0; rg.n];
    let s = solve_radial(&bg, &rg, &z, &z, &short(2.0), |_| Ok(())).unwrap();
    assert_eq!(s.max_step_change, 0.0);
    assert!(s.snapshots.iter().all(|f| f.theta.iter().chain(&f.v).all(|x| *x == 0.0)));

    let bg = anisotropic(2.5);
    let g = CartGrid::new(bg.params(), 12);
    let z = vec![Vec3::zeros(); g.len()];
    let s = solve_linear3d(&bg, &g, &z, &z, &short(2.0), |_| Ok(())).unwrap();
    assert_eq!(s.max_step_change, 0.0);
    let att = cartesian_attractor(&s.snapshots, &g, -0.6).err();
    assert!(att.is_some(), "a 2.0 span is below the attractor minimum");
}

#[test]
fn radial_velocity_decays_at_mu0() {
    let bg = conformal(8.5);
    let rg = RadialGrid::new(bg.params(), 512);
    let (mut taus, mut vn) = (vec![], vec![]);
    let cfg = SolverConfig { store_every: 0.5, ..Default::default() };
    let s = solve_radial(&bg, &rg, &profile(&rg, 1e-3), &vec![0.0; rg.n], &cfg, |f| {
        taus.push(f.tau);
        vn.push(rg.weighted_norm(&f.v, rg.params.alpha, Side::Both).sqrt());
        Ok(())
    })
    .unwrap();
    let rate = -decay_fit(&taus[1..], &vn[1..]).unwrap().rate;
    assert!((rate - 1.0).abs() < 0.15, "{rate}");
    let att = radial_attractor(&s.snapshots, &rg, -1.0).unwrap();
    assert!(att.monotone_after_one, "{:?}", att.ladder);
}

#[test]
fn radial_self_convergence() {
    let bg = conformal(2.5);
    let run = |n: usize| {
        let rg = RadialGrid::new(bg.params(), n);
        let cfg = SolverConfig { max_dt: 2e-3, ..short(2.0) };
        let s = solve_radial(&bg, &rg, &profile(&rg, 1e-3), &vec![0.0; n], &cfg, |_| Ok(())).unwrap();
        (rg, s.snapshots.last().unwrap().theta.clone())
    };
    let (coarse_grid, coarse) = run(128);
    let (_, mid) = run(256);
    let (_, fine) = run(512);
    let restrict = |f: &[f64], k: usize| -> Vec<f64> {
        (0..f.len() / k).map(|i| f[k * i..k * (i + 1)].iter().sum::<f64>() / k as f64).collect()
    };
    let diff = |a: &[f64], b: &[f64]| {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        coarse_grid.weighted_norm(&d, coarse_grid.params.alpha, Side::Both).sqrt()
    };
    let e1 = diff(&coarse, &restrict(&mid, 2));
    let e2 = diff(&restrict(&mid, 2), &restrict(&fine, 4));
    assert!(e1 / e2 > 3.0, "{e1} {e2}");
}

#[test]
fn cartesian_and_radial_solvers_agree() {
    let bg = conformal(2.5);
    let p = *bg.params();
    let amp = 1e-6;
    let rg = RadialGrid::new(&p, 1024);
    let cfg = SolverConfig { output_every: 0.5, store_every: 0.5, ..short(2.0) };
    let rs = solve_radial(&bg, &rg, &profile(&rg, amp), &vec![0.0; rg.n], &cfg, |_| Ok(())).unwrap();
    let g = CartGrid::new(&p, 48);
    let th3 = g.sample(|y| *y * (amp * (1.0 - y.norm_squared())));
    let cs = solve_linear3d(&bg, &g, &th3, &vec![Vec3::zeros(); g.len()], &cfg, |_| Ok(())).unwrap();
    let interp = |r: f64, f: &[f64]| {
        let x = (r / rg.dr - 0.5).clamp(0.0, (rg.n - 1) as f64);
        let i = (x.floor() as usize).min(rg.n - 2);
        let t = x - i as f64;
        f[i] * (1.0 - t) + f[i + 1] * t
    };
    for (a, b) in rs.snapshots.iter().zip(&cs.snapshots).skip(1) {
        let lift = |f: &[f64]| -> Vec<Vec3> {
            (0..g.len()).map(|i| if g.r[i] > 0.0 { g.centres[i] * (interp(g.r[i], f) / g.r[i]) } else { Vec3::zeros() }).collect()
        };
        for (radial, cart) in [(lift(&a.theta), &b.theta), (lift(&a.v), &b.v)] {
            let d: Vec<Vec3> = radial.iter().zip(cart).map(|(x, y)| x - y).collect();
            let rel = (g.weighted_norm(&d, p.alpha, Side::Both) / g.weighted_norm(&radial, p.alpha, Side::Both)).sqrt();
            assert!(rel < 1e-2, "tau {}: {rel}", a.tau);
        }
    }
}

#[test]
fn anisotropic_velocity_decays_at_least_at_mu0() {
    let bg = anisotropic(4.5);
    let g = CartGrid::new(bg.params(), 20);
    let eps = 1e-3;
    let th = g.sample(|y| Vec3::new(y.y, -y.x + y.z * y.z, y.z) * (eps * (1.0 - y.norm_squared())));
    let (mut taus, mut vn) = (vec![], vec![]);
    let cfg = SolverConfig { tau_end: 4.0, output_every: 0.1, store_every: 1.0, max_dt: 0.05, ..Default::default() };
    solve_linear3d(&bg, &g, &th, &vec![Vec3::zeros(); g.len()], &cfg, |f| {
        taus.push(f.tau);
        vn.push(g.weighted_norm(&f.v, g.params.alpha, Side::Both).sqrt());
        Ok(())
    })
    .unwrap();
    let mu1 = bg.frame_at_tau(4.0).unwrap().mu_tau_over_mu;
    let rate = -decay_fit(&taus[1..], &vn[1..]).unwrap().rate;
    assert!(rate >= 0.6 * mu1, "{rate} {mu1}");
}

#[test]
fn executors_give_identical_runs() {
    let bg = anisotropic(1.5);
    let p = *bg.params();
    let runs: Vec<_> = [Exec::Sequential, Exec::Parallel]
        .into_iter()
        .map(|exec| {
            let g = CartGrid::new(&p, 12).with_exec(exec);
            let th = g.sample(|y| Vec3::new(y.y * y.z, y.x, 0.5 * y.z) * (1e-3 * (1.0 - y.norm_squared())));
            solve_linear3d(&bg, &g, &th, &th, &short(1.0), |_| Ok(())).unwrap()
        })
        .collect();
    assert_eq!(runs[0].snapshots, runs[1].snapshots);
}

#[test]
fn invalid_inputs_are_rejected() {
    let bg = conformal(2.5);
    let rg = RadialGrid::new(bg.params(), 64);
    let z = vec![0.0; rg.n];
    let bad_cfl = SolverConfig { cfl: 1.5, ..short(1.0) };
    assert!(matches!(solve_radial(&bg, &rg, &z, &z, &bad_cfl, |_| Ok(())), Err(SolverError::Config(_))));
    assert!(matches!(solve_radial(&bg, &rg, &z[1..], &z, &short(1.0), |_| Ok(())), Err(SolverError::Config(_))));
    assert!(matches!(solve_radial(&bg, &rg, &z, &z, &short(4.0), |_| Ok(())), Err(SolverError::Config(_))));
    let other = RadialGrid::new(&GammaParams::new(1.4, 1.0).unwrap(), 64);
    assert!(matches!(solve_radial(&bg, &other, &z, &z, &short(1.0), |_| Ok(())), Err(SolverError::Config(_))));
    let aniso = anisotropic(2.5);
    let rg14 = RadialGrid::new(aniso.params(), 64);
    assert!(matches!(
        solve_radial(&aniso, &rg14, &z, &z, &short(1.0), |_| Ok(())),
        Err(SolverError::NotConformal { .. })
    ));
    let crushed: Vec<f64> = rg.r.iter().map(|r| -1.5 * r).collect();
    assert!(matches!(solve_radial(&bg, &rg, &crushed, &z, &short(1.0), |_| Ok(())), Err(SolverError::Degenerate { .. })));
    let stop = solve_radial(&bg, &rg, &z, &z, &short(1.0), |f| if f.tau > 0.4 { Err("stop".into()) } else { Ok(()) });
    assert!(matches!(stop, Err(SolverError::Aborted { .. })));
}

#[test]
fn attractor_of_synthetic_ladder() {
    let taus: Vec<f64> = (0..=80).map(|k| 0.1 * k as f64).collect();
    let zero = attractor_estimate(&taus, &vec![0.0; taus.len()], 0.0, -1.0).unwrap();
    assert!(zero.monotone_after_one && zero.ladder.iter().all(|p| p.residual == 0.0));
    let dist: Vec<f64> = taus.iter().map(|t| (-t).exp() - (-8.0f64).exp()).collect();
    let rep = attractor_estimate(&taus, &dist, 1.0, -1.0).unwrap();
    assert!(rep.monotone_after_one);
    let rate = rep.envelope.unwrap().rate;
    assert!((rate + 1.0).abs() < 0.1, "{rate}");
    let bumpy: Vec<f64> = taus.iter().map(|t| if (*t - 4.0).abs() < 0.05 { 1.0 } else { (-t).exp() }).collect();
    assert!(!attractor_estimate(&taus, &bumpy, 1.0, -1.0).unwrap().monotone_after_one);
    assert!(attractor_estimate(&taus[..20], &dist[..20], 1.0, -1.0).is_err());
}
