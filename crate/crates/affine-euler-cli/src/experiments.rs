//! One function per experiment kind. Each writes its artifacts and fills a verdict.

use std::path::Path;

use affine_euler::affine::ode_energy;
use affine_euler::asymptotics::{asymptotics_report, mu_over_t_deviation};
use affine_euler::ball::commutators::{commutator_suite, TestFields};
use affine_euler::ball::lie::FlowMapDiff;
use affine_euler::ball::{CartGrid, RadialGrid, Side};
use affine_euler::diagnostics::{
    hardy_and_embedding_check, key_lemma_check, norm_energy_interval, radial_report, random_path, s_norm, Chart,
    CurlTransport, EnergyGuard, CADENCE_FLAG,
};
use affine_euler::eulerian::{
    euler_residual, gl3_transform, observed_orders, support_and_vacuum_checks, AffineFlow, FlowField, ResidualReport,
    ResidualSpec, Vec3,
};
use affine_euler::perturb::attractor::MIN_SPAN;
use affine_euler::perturb::radial::min_face_jacobian;
use affine_euler::perturb::{
    cartesian_attractor, decay_fit, radial_attractor, solve_linear3d, solve_radial, trajectory_to_tau,
    AttractorReport,
};
use affine_euler::{derived_frame, integrate_affine, Exec, GammaParams, Mat3};
use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{is_isotropic, Kind, Profile, RunConfig};
use crate::error::CliError;
use crate::output::RunDir;
use crate::verdict::Verdict;

/// Headline numbers of a run, collected by sweeps.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub mu1: Option<f64>,
    pub mu0: Option<f64>,
    pub v_rate: Option<f64>,
    pub b_rate: Option<f64>,
}

pub struct Outcome {
    pub verdict: Verdict,
    pub summary: Summary,
}

/// Runs `kind` into `dir`. On a numerical failure the run directory still receives
/// `error.json` and a manifest with status `error`.
pub fn run(kind: Kind, cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    cfg.validate(kind)?;
    let p = cfg.gamma_params()?;
    let mut out = RunDir::create(dir)?;
    let mut verdict = Verdict::default();
    let result = match kind {
        Kind::Affine => affine(cfg, &p, &mut out, &mut verdict),
        Kind::Fields => fields(cfg, &p, &mut out, &mut verdict),
        Kind::PerturbRadial => perturb_radial(cfg, &p, &mut out, &mut verdict),
        Kind::Perturb3d => perturb_3d(cfg, &p, &mut out, &mut verdict),
        Kind::Verify => verify(cfg, &mut out, &mut verdict),
    };
    match result {
        Ok(summary) => {
            out.json("verdict.json", "verdict", &verdict)?;
            out.json("summary.json", "summary", &summary)?;
            let status = if verdict.passed() { "pass" } else { "fail" };
            out.finish(kind.name(), cfg.seed, cfg, status)?;
            Ok(Outcome { verdict, summary })
        }
        Err(e) => {
            out.json("error.json", "error", &serde_json::json!({ "error": e.to_string() }))?;
            out.finish(kind.name(), cfg.seed, cfg, "error")?;
            Err(e)
        }
    }
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::numerical(e)
}

/// `mu1 = lim mu_tau / mu` from a run to t = 1e8.
fn asymptotic_mu1(p: &GammaParams, a0: &Mat3, a1: &Mat3) -> Result<f64, CliError> {
    let long = integrate_affine(p, a0, a1, 1e8, 1e-11).map_err(numerical)?;
    Ok(asymptotics_report(&long).map_err(numerical)?.mu1)
}

fn affine(cfg: &RunConfig, p: &GammaParams, out: &mut RunDir, v: &mut Verdict) -> Result<Summary, CliError> {
    let tol = &cfg.tolerances;
    let (a0, a1) = cfg.initial_data();
    let tr = integrate_affine(p, &a0, &a1, cfg.affine.t_end, cfg.affine.tol).map_err(numerical)?;
    let e0 = ode_energy(p, &a0, &a1);
    let mut rows = Vec::with_capacity(tr.samples().len());
    let mut drift: f64 = 0.0;
    for s in tr.samples() {
        let f = derived_frame(p, &s.a, &s.a_dot).map_err(numerical)?;
        let e = ode_energy(p, &s.a, &s.a_dot);
        drift = drift.max((e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
        let mut row = vec![s.t, s.tau, s.mu(), s.det(), e, f.gamma_star.norm(), f.lambda_tau.norm()];
        row.extend(s.a.transpose().iter());
        rows.push(row);
    }
    let mut headers = vec!["t", "tau", "mu", "det", "energy", "gamma_star_norm", "lambda_tau_norm"];
    headers.extend(["a11", "a12", "a13", "a21", "a22", "a23", "a31", "a32", "a33"]);
    out.csv("trajectory.csv", "integrate_affine", &headers, &rows)?;
    v.at_most("affine_energy_drift", drift, tol.energy_drift);

    let isotropic = is_isotropic(&a0) && is_isotropic(&a1);
    if isotropic && (p.gamma - 5.0 / 3.0).abs() < 1e-14 {
        let (x0, x1) = (a0[(0, 0)], a1[(0, 0)]);
        let e = x1 * x1 + p.delta / (x0 * x0);
        let err = tr
            .samples()
            .iter()
            .map(|s| {
                let exact = (x0 * x0 + 2.0 * x0 * x1 * s.t + e * s.t * s.t).sqrt();
                (s.a - Mat3::identity() * exact).amax() / exact
            })
            .fold(0.0, f64::max);
        v.at_most("affine_closed_form", err, tol.closed_form);
    }

    let rep = asymptotics_report(&tr).map_err(numerical)?;
    out.json("asymptotics.json", "asymptotics_report", &rep)?;
    v.report("asymptotic_mu1", rep.mu1, f64::NAN);
    v.report("asymptotic_mu0", rep.mu0, f64::NAN);
    if cfg.affine.t_end >= 1e4 {
        let dev = mu_over_t_deviation(&tr, &rep, 1e4).map_err(numerical)?;
        v.at_most("asymptotic_mu_over_t", dev, tol.mu_over_t);
    }
    if !isotropic && rep.reliable {
        if let Some(f) = rep.gamma_star_fit {
            v.relative("asymptotic_gamma_star_rate", f.rate, -rep.mu1, tol.asymptotic_rate);
        }
        if let Some(f) = rep.lambda_tau_fit {
            v.relative("asymptotic_lambda_tau_rate", f.rate, -rep.mu1, tol.asymptotic_rate);
        }
        if let Some(f) = rep.lambda_tautau_fit {
            let bound = -2.0 * rep.mu0;
            let pass = f.rate <= bound * (1.0 - tol.asymptotic_rate);
            v.check("asymptotic_lambda_tautau_envelope", pass, f.rate, bound, tol.asymptotic_rate);
        }
    }
    Ok(Summary { mu1: Some(rep.mu1), mu0: Some(rep.mu0), ..Default::default() })
}

fn residual_row(chart: f64, r: &ResidualReport) -> Vec<f64> {
    vec![
        chart,
        r.h,
        r.dt,
        r.nodes as f64,
        r.continuity_l2,
        r.continuity_sup,
        r.momentum_l2,
        r.momentum_sup,
    ]
}

fn fields(cfg: &RunConfig, p: &GammaParams, out: &mut RunDir, v: &mut Verdict) -> Result<Summary, CliError> {
    let (a0, a1) = cfg.initial_data();
    let t = cfg.fields.t;
    let tr = integrate_affine(p, &a0, &a1, 2.0 * t, cfg.affine.tol).map_err(numerical)?;
    let n = cfg.grid.residual_n;
    let pair = |f: &dyn Fn(usize) -> Result<ResidualReport, CliError>| -> Result<_, CliError> { Ok((f(n)?, f(2 * n)?)) };
    let base = AffineFlow { traj: &tr };
    let (c0, f0) = pair(&|n| {
        euler_residual(&base, t, &ResidualSpec { n, ..Default::default() }, Exec::default()).map_err(numerical)
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let axis = Vec3::from_fn(|_, _| rng.gen_range(-1.5..1.5));
    let b = Rotation3::from_scaled_axis(axis).into_inner() * rng.gen_range(0.5..2.0);
    let moved = gl3_transform(AffineFlow { traj: &tr }, &b).map_err(numerical)?;
    let (c1, f1) = pair(&|n| {
        euler_residual(&moved, t, &ResidualSpec { n, ..Default::default() }, Exec::default()).map_err(numerical)
    })?;
    out.csv(
        "residuals.csv",
        "euler_residual",
        &["transformed", "h", "dt", "nodes", "continuity_l2", "continuity_sup", "momentum_l2", "momentum_sup"],
        &[residual_row(0.0, &c0), residual_row(0.0, &f0), residual_row(1.0, &c1), residual_row(1.0, &f1)],
    )?;
    let tol = cfg.tolerances.residual_order;
    let (oc, om) = observed_orders(&c0, &f0);
    v.at_least("euler_continuity_order", oc, tol);
    v.at_least("euler_momentum_order", om, tol);
    let (tc, tm) = observed_orders(&c1, &f1);
    v.at_least("conformal_continuity_order", tc, tol);
    v.at_least("conformal_momentum_order", tm, tol);
    v.at_most("conformal_lambda_invariance", (moved.lambda() - Mat3::identity()).amax(), 1e-13);

    let support = support_and_vacuum_checks(&tr, t, 1e-3).map_err(numerical)?;
    let rows: Vec<Vec<f64>> = support.radius.iter().map(|(t, r)| vec![*t, *r]).collect();
    out.csv("support.csv", "support_and_vacuum_checks", &["t", "support_radius"], &rows)?;
    v.report("support_growth_slope", support.growth_slope, f64::NAN);
    v.report("vacuum_normal_derivative", support.dcs2_dn, support.dcs2_dn_exact);
    Ok(Summary::default())
}

/// Monotone attractor ladder as a check once the run spans enough tau, otherwise a report.
fn attractor_checks(
    v: &mut Verdict,
    out: &mut RunDir,
    att: Result<AttractorReport, affine_euler::perturb::SolverError>,
    span: f64,
) -> Result<(), CliError> {
    match att {
        Ok(a) => {
            out.json("attractor.json", "attractor_estimate", &a)?;
            v.check("attractor_monotone", a.monotone_after_one, f64::from(u8::from(a.monotone_after_one)), 1.0, 0.0);
            v.report("attractor_envelope_rate", a.envelope.map_or(f64::NAN, |f| f.rate), a.predicted_rate);
        }
        Err(_) if span < MIN_SPAN => v.report("attractor_monotone", f64::NAN, 1.0),
        Err(e) => return Err(numerical(e)),
    }
    Ok(())
}

fn energy_checks(cfg: &RunConfig, p: &GammaParams, v: &mut Verdict, pairs: &[(f64, f64)], s: &[f64], d_min: f64) {
    if let Some((lo, hi, spread)) = norm_energy_interval(pairs) {
        v.at_most("norm_energy_spread", spread, cfg.tolerances.norm_spread);
        v.report("norm_energy_lower", lo, f64::NAN);
        v.report("norm_energy_upper", hi, f64::NAN);
    }
    if s[0] > 0.0 {
        let growth = s.iter().cloned().fold(0.0, f64::max) / s[0];
        v.at_most("s0_bound", growth, cfg.tolerances.s_growth);
    }
    if p.gamma <= 5.0 / 3.0 + 1e-14 {
        v.at_least("dissipation_sign", d_min, 0.0);
    } else {
        v.report("dissipation_sign", d_min, 0.0);
    }
}

fn radial_profile(cfg: &RunConfig, grid: &RadialGrid) -> (Vec<f64>, Vec<f64>) {
    let d = &cfg.data;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (c0, c1) = match d.profile {
        Profile::Random => (rng.gen_range(0.5..1.0), rng.gen_range(-1.0..1.0)),
        _ => (1.0, 0.0),
    };
    let shape = |r: f64| match d.profile {
        Profile::Zero => 0.0,
        _ => r * (c0 + c1 * r * r) * (1.0 - r * r),
    };
    let theta = grid.r.iter().map(|&r| d.theta_amplitude * shape(r)).collect();
    let v = grid.r.iter().map(|&r| d.v_amplitude * shape(r)).collect();
    (theta, v)
}

fn perturb_radial(cfg: &RunConfig, p: &GammaParams, out: &mut RunDir, v: &mut Verdict) -> Result<Summary, CliError> {
    let (a0, a1) = cfg.initial_data();
    let sc = &cfg.solver;
    let bg = trajectory_to_tau(p, &a0, &a1, sc.tau_end + 0.5, 1e-12).map_err(numerical)?;
    let mu1 = asymptotic_mu1(p, &a0, &a1)?;
    let mu0 = p.mu0_factor() * mu1;
    let grid = RadialGrid::new(p, cfg.grid.radial_n);
    let (theta0, v0) = radial_profile(cfg, &grid);
    let mut guard = EnergyGuard::default();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut pairs = Vec::new();
    let series = solve_radial(&bg, &grid, &theta0, &v0, sc, |f| {
        let frame = bg.frame_at_tau(f.tau).map_err(|e| e.to_string())?;
        let rep = radial_report(&grid, f.tau, &f.theta, &f.v, &frame, 0, Chart::FlowMap).map_err(|e| e.to_string())?;
        guard.check(f.tau, rep.e)?;
        let vn = grid.weighted_norm(&f.v, p.alpha, Side::Both).sqrt();
        let tn = grid.weighted_norm(&f.theta, p.alpha, Side::Both).sqrt();
        rows.push(vec![f.tau, vn, tn, rep.s, rep.e, rep.d, min_face_jacobian(&grid, &f.theta).0]);
        pairs.push((rep.e, rep.s));
        Ok(())
    })
    .map_err(numerical)?;
    out.csv("series.csv", "solve_radial", &["tau", "v_norm", "theta_norm", "s0", "e0", "d0", "min_jacobian"], &rows)?;
    v.report("steps", series.steps as f64, f64::NAN);
    v.report("mu1", mu1, f64::NAN);
    let mut summary = Summary { mu1: Some(mu1), mu0: Some(mu0), ..Default::default() };
    if cfg.data.profile == Profile::Zero || (cfg.data.theta_amplitude == 0.0 && cfg.data.v_amplitude == 0.0) {
        v.at_most("steady_state_step_change", series.max_step_change, cfg.tolerances.steady_state);
        return Ok(summary);
    }
    let taus: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let vn: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let skip = usize::from(vn[0] == 0.0);
    let rate = -decay_fit(&taus[skip..], &vn[skip..]).map_err(numerical)?.rate;
    summary.v_rate = Some(rate);
    v.relative("v_decay_rate", rate, mu0, cfg.tolerances.radial_rate);
    let s: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    let d_min = rows.iter().map(|r| r[5]).fold(f64::INFINITY, f64::min);
    energy_checks(cfg, p, v, &pairs, &s, d_min);
    let predicted = -(3.0 * p.gamma - 3.0) / 2.0 * mu0;
    attractor_checks(v, out, radial_attractor(&series.snapshots, &grid, predicted), sc.tau_end)?;
    Ok(summary)
}

fn cartesian_profile(cfg: &RunConfig, grid: &CartGrid) -> (Vec<Vec3>, Vec<Vec3>) {
    let d = &cfg.data;
    let bump = |y: &Vec3| 1.0 - y.norm_squared();
    match d.profile {
        Profile::Zero => (vec![Vec3::zeros(); grid.len()], vec![Vec3::zeros(); grid.len()]),
        Profile::Bubble => (
            grid.sample(|y| *y * (d.theta_amplitude * bump(y))),
            grid.sample(|y| *y * (d.v_amplitude * bump(y))),
        ),
        Profile::Swirl => (
            grid.sample(|y| Vec3::new(y.y + 0.5 * y.x * y.z, -y.x + y.z * y.z, 0.3 * y.x * y.y + y.z) * (d.theta_amplitude * bump(y))),
            grid.sample(|y| Vec3::new(-y.y + 0.2 * y.z, y.x, 0.4 * y.x * y.y) * (d.v_amplitude * bump(y))),
        ),
        Profile::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut coeffs = || -> Vec<f64> { (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            let (ct, cv) = (coeffs(), coeffs());
            let field = |c: &[f64], amp: f64| {
                grid.sample(|y| {
                    let m = [1.0, y.x, y.y, y.z, y.x * y.y, y.y * y.z, y.z * y.x, y.x * y.x, y.y * y.y, y.z * y.z];
                    Vec3::from_fn(|i, _| amp * bump(y) * (0..10).map(|k| c[10 * i + k] * m[k]).sum::<f64>())
                })
            };
            (field(&ct, d.theta_amplitude), field(&cv, d.v_amplitude))
        }
    }
}

fn perturb_3d(cfg: &RunConfig, p: &GammaParams, out: &mut RunDir, v: &mut Verdict) -> Result<Summary, CliError> {
    let (a0, a1) = cfg.initial_data();
    let sc = &cfg.solver;
    let bg = trajectory_to_tau(p, &a0, &a1, sc.tau_end + 0.5, 1e-12).map_err(numerical)?;
    let mu1 = asymptotic_mu1(p, &a0, &a1)?;
    let mu0 = p.mu0_factor() * mu1;
    let grid = CartGrid::new(p, cfg.grid.cart_n);
    let (theta0, v0) = cartesian_profile(cfg, &grid);
    let mut guard = EnergyGuard::default();
    let mut curl = CurlTransport::new(&grid);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut pairs = Vec::new();
    let mut grad_max: f64 = 0.0;
    let series = solve_linear3d(&bg, &grid, &theta0, &v0, sc, |f| {
        let frame = bg.frame_at_tau(f.tau).map_err(|e| e.to_string())?;
        let rep = s_norm(&grid, f.tau, &f.theta, &f.v, &frame, 0, Chart::Identity).map_err(|e| e.to_string())?;
        guard.check(f.tau, rep.e)?;
        curl.push(f.tau, &f.v, &frame);
        grad_max = grad_max.max(grid.weighted_norm(&grid.jacobian(&f.v), p.alpha + 1.0, Side::Both));
        let vn = grid.weighted_norm(&f.v, p.alpha, Side::Both).sqrt();
        let tn = grid.weighted_norm(&f.theta, p.alpha, Side::Both).sqrt();
        rows.push(vec![f.tau, vn, tn, rep.s, rep.e, rep.d, rep.b_v]);
        pairs.push((rep.e, rep.s));
        Ok(())
    })
    .map_err(numerical)?;
    out.csv("series.csv", "solve_linear3d", &["tau", "v_norm", "theta_norm", "s0", "e0", "d0", "b0_v"], &rows)?;
    let transport = curl.report(2.0 * mu0);
    out.json("curl_transport.json", "curl_transport_check", &transport)?;
    v.report("steps", series.steps as f64, f64::NAN);
    v.report("mu1", mu1, f64::NAN);
    let mut summary = Summary { mu1: Some(mu1), mu0: Some(mu0), ..Default::default() };
    if cfg.data.profile == Profile::Zero || (cfg.data.theta_amplitude == 0.0 && cfg.data.v_amplitude == 0.0) {
        v.at_most("steady_state_step_change", series.max_step_change, cfg.tolerances.steady_state);
        return Ok(summary);
    }
    let taus: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let vn: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let skip = usize::from(vn[0] == 0.0);
    let rate = -decay_fit(&taus[skip..], &vn[skip..]).map_err(numerical)?.rate;
    summary.v_rate = Some(rate);
    v.relative("v_decay_rate", rate, mu0, cfg.tolerances.cartesian_rate);
    let b_max = transport.b_v.iter().cloned().fold(0.0, f64::max);
    v.report("curl_transport_relative", transport.max_relative, CADENCE_FLAG);
    if b_max > 1e-8 * grad_max {
        let b_rate = -transport.fit.map_or(f64::NAN, |f| f.rate);
        summary.b_rate = Some(b_rate);
        v.relative("curl_decay_rate", b_rate, 2.0 * mu0, cfg.tolerances.cartesian_rate);
    } else {
        v.report("curl_decay_rate", f64::NAN, 2.0 * mu0);
    }
    let s: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    let d_min = rows.iter().map(|r| r[5]).fold(f64::INFINITY, f64::min);
    energy_checks(cfg, p, v, &pairs, &s, d_min);
    let predicted = -(3.0 * p.gamma - 3.0) / 2.0 * mu0;
    attractor_checks(v, out, cartesian_attractor(&series.snapshots, &grid, predicted), sc.tau_end)?;
    Ok(summary)
}

fn verify(cfg: &RunConfig, out: &mut RunDir, v: &mut Verdict) -> Result<Summary, CliError> {
    let tol = &cfg.tolerances;
    let p = GammaParams::default();

    let tr = integrate_affine(&p, &Mat3::identity(), &Mat3::zeros(), 1e3, 1e-10).map_err(numerical)?;
    let a10 = tr.state_at_t(10.0).map_err(numerical)?.a;
    let exact = 101f64.sqrt();
    v.at_most("affine_closed_form", (a10 - Mat3::identity() * exact).amax() / exact, tol.closed_form);
    let e0 = ode_energy(&p, &tr.first().a, &tr.first().a_dot);
    let drift = tr.samples().iter().map(|s| (ode_energy(&p, &s.a, &s.a_dot) - e0).abs() / e0.abs()).fold(0.0, f64::max);
    v.at_most("affine_energy_drift", drift, tol.energy_drift);

    let grid = CartGrid::new(&p, cfg.grid.cart_n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut inv_worst, mut curl_worst): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let c: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eps = rng.gen_range(0.01..0.1);
        let theta = grid.sample(|y| {
            let m = [1.0, y.x, y.y, y.z, y.x * y.y, y.y * y.z, y.z * y.x, y.x * y.x, y.y * y.y, y.z * y.z];
            Vec3::from_fn(|i, _| eps * (0..10).map(|k| c[10 * i + k] * m[k]).sum::<f64>())
        });
        let m = Mat3::identity() + Mat3::from_fn(|_, _| rng.gen_range(-0.5..0.5));
        let s = m.transpose() * m;
        let lambda = s / s.determinant().cbrt();
        let flow = FlowMapDiff::new(&grid, &theta).map_err(numerical)?;
        inv_worst = inv_worst.max(flow.inverse_residual());
        let eta: Vec<Vec3> = grid.centres.iter().zip(&theta).map(|(y, t)| lambda * (y + t)).collect();
        let curl = flow.curl_matrix(&grid.jacobian(&eta), &lambda);
        curl_worst = curl_worst.max(grid.active_list.iter().map(|&i| curl[i].amax()).fold(0.0, f64::max));
    }
    v.at_most("inv_jac_identity", inv_worst, tol.identity);
    v.at_most("curl_lambda_eta", curl_worst, tol.identity);

    let taus: Vec<f64> = (0..21).map(|i| 0.1 * i as f64).collect();
    let mut lemma_rows = Vec::new();
    for k in 0..20 {
        let seed = cfg.seed.wrapping_mul(20).wrapping_add(k);
        let path = random_path(seed);
        let r = key_lemma_check(|t| path.m_at(t), |t| path.lambda_at(t), &taus, 1e-3).map_err(numerical)?;
        lemma_rows.push(vec![seed as f64, r.max_residual, r.max_lhs]);
    }
    out.csv("key_lemma.csv", "key_lemma_check", &["seed", "max_residual", "max_lhs"], &lemma_rows)?;
    v.at_most("key_lemma", lemma_rows.iter().map(|r| r[1]).fold(0.0, f64::max), tol.key_lemma);

    let comm = commutator_suite(&p, &TestFields::polynomial(), &[0.02, 0.01, 0.005, 0.0025], 24);
    let rows: Vec<Vec<String>> = comm
        .identities
        .iter()
        .map(|i| {
            let mut row = vec![i.name.clone(), i.exact.to_string()];
            row.extend(i.residuals.iter().map(|x| x.to_string()));
            row.extend(i.orders.iter().map(|x| x.to_string()));
            row
        })
        .collect();
    out.csv_text(
        "commutators.csv",
        "commutator_suite",
        &["identity", "exact", "res_h0", "res_h1", "res_h2", "res_h3", "order_01", "order_12", "order_23"],
        &rows,
    )?;
    let worst = comm.identities.iter().filter(|i| !i.exact).map(|i| i.min_order()).fold(f64::INFINITY, f64::min);
    let ok = comm.identities.iter().all(|i| i.converges_at(tol.commutator_order));
    v.check("commutator_ladder", ok, worst, tol.commutator_order, 0.0);

    let mut hardy_rows = Vec::new();
    let (mut finite, mut stable) = (true, true);
    for gamma in [1.4, 5.0 / 3.0] {
        let rep = hardy_and_embedding_check(&GammaParams::new(gamma, 1.0).map_err(numerical)?, &[0.0, 0.5, 1.0, -0.5, -1.5], 8);
        finite &= rep.all_finite;
        stable &= rep.all_stable;
        for c in rep.cases {
            hardy_rows.push(vec![
                gamma.to_string(),
                c.kind,
                c.function,
                c.k.to_string(),
                c.constant.to_string(),
                c.constant_refined.to_string(),
            ]);
        }
    }
    out.csv_text(
        "hardy.csv",
        "hardy_and_embedding_check",
        &["gamma", "kind", "function", "k", "constant", "constant_refined"],
        &hardy_rows,
    )?;
    v.check("hardy_embedding", finite && stable, f64::from(u8::from(finite && stable)), 1.0, 0.0);

    let signs: Vec<f64> = [2.0, 5.0 / 3.0, 4.0 / 3.0]
        .iter()
        .map(|g| GammaParams::new(*g, 1.0).map(|p| p.dissipation_factor().signum() * f64::from(u8::from(p.dissipation_factor() != 0.0))))
        .collect::<Result<_, _>>()
        .map_err(numerical)?;
    v.check("dissipation_prefactor_sign", signs == [-1.0, 0.0, 1.0], signs[0], -1.0, 0.0);
    Ok(Summary::default())
}
