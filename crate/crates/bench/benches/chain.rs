use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ioncavity::chain::{hessian, solve_dimensionless_positions};
use ioncavity::constants::khz_to_angular;
use ioncavity::linalg::jacobi_eigen;
use ioncavity::{make_config, solve_chain, visibility_curve};

fn chain(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_chain");
    for n in [2usize, 5, 10, 20] {
        let cfg = make_config(40.0, &[("num_ions", n as f64)]).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| solve_chain(black_box(cfg), khz_to_angular(500.0)).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("jacobi");
    for n in [5usize, 20, 50] {
        let a = hessian(&solve_dimensionless_positions(n).unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| jacobi_eigen(black_box(a), 1e-12))
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let cfg = make_config(40.0, &[("num_ions", 5.0)]).unwrap();
    let grid: Vec<f64> = (0..=220).map(|i| khz_to_angular(400.0 + i as f64)).collect();
    let t = 1.5 * cfg.doppler_temperature();
    c.bench_function("visibility_curve/5 ions x 221", |b| {
        b.iter(|| visibility_curve(black_box(&cfg), t, &grid).unwrap())
    });
}

criterion_group!(benches, chain, sweep);
criterion_main!(benches);
