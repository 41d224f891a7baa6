use affine_euler::ball::{CartGrid, Side};
use affine_euler::diagnostics::{s_norm, Chart};
use affine_euler::eulerian::{euler_residual, AffineFlow, ResidualSpec, Vec3};
use affine_euler::perturb::linear3d::pressure_term;
use affine_euler::{derived_frame, integrate_affine, Exec, GammaParams, Mat3};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const EXECS: [Exec; 2] = [Exec::Sequential, Exec::Parallel];

fn grid_kernels(c: &mut Criterion) {
    let p = GammaParams::new(1.4, 1.0).unwrap();
    let lambda = Mat3::from_diagonal(&Vec3::new(1.44, 1.0, 1.0 / 1.44));
    let mut group = c.benchmark_group("grid");
    group.sample_size(10);
    for exec in EXECS {
        let g = CartGrid::new(&p, 32).with_exec(exec);
        let theta = g.sample(|y| Vec3::new(y.y * y.z, y.x, y.z * y.z) * (0.1 * (1.0 - y.norm_squared())));
        let frame = derived_frame(&p, &Mat3::identity(), &Mat3::identity()).unwrap();
        let label = format!("{exec:?}");
        group.bench_with_input(BenchmarkId::new("pressure", &label), &theta, |b, t| {
            b.iter(|| pressure_term(&g, &lambda, t))
        });
        group.bench_with_input(BenchmarkId::new("weighted_norm", &label), &theta, |b, t| {
            b.iter(|| g.weighted_norm(t, p.alpha, Side::Both))
        });
        group.bench_with_input(BenchmarkId::new("s_norm_order1", &label), &theta, |b, t| {
            b.iter(|| s_norm(&g, 0.0, t, t, &frame, 1, Chart::FlowMap).unwrap())
        });
    }
    group.finish();
}

fn residual(c: &mut Criterion) {
    let p = GammaParams::default();
    let tr = integrate_affine(&p, &Mat3::identity(), &Mat3::identity(), 2.0, 1e-12).unwrap();
    let flow = AffineFlow { traj: &tr };
    let spec = ResidualSpec { n: 32, ..Default::default() };
    let mut group = c.benchmark_group("euler_residual");
    group.sample_size(10);
    for exec in EXECS {
        group.bench_function(format!("{exec:?}"), |b| b.iter(|| euler_residual(&flow, 1.0, &spec, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, grid_kernels, residual);
criterion_main!(benches);
