use binormal_bench::standard_seeds;
use binormal_core::curve::{integrate, DEFAULT_S_MAX, DEFAULT_TOL};
use binormal_core::families::{mixed_family, odd_family};
use binormal_core::nls::{extract_f_limits, profile_from_curve};
use binormal_core::selfsimilar::extract_trace;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn curve(c: &mut Criterion) {
    let mut g = c.benchmark_group("integrate");
    g.sample_size(20);
    for (a, g0, t0) in standard_seeds() {
        g.bench_with_input(BenchmarkId::from_parameter(a), &a, |b, &a| {
            b.iter(|| integrate(black_box(g0), t0, a, DEFAULT_S_MAX, DEFAULT_TOL).unwrap())
        });
    }
    g.finish();
}

fn trace(c: &mut Criterion) {
    let (a, g0, t0) = standard_seeds()[0];
    let traj = integrate(g0, t0, a, DEFAULT_S_MAX, DEFAULT_TOL).unwrap();
    let mut g = c.benchmark_group("trace");
    g.sample_size(10);
    g.bench_function("extract_trace", |b| b.iter(|| extract_trace(black_box(&traj)).unwrap()));
    g.bench_function("profile_and_limits", |b| {
        b.iter(|| {
            let p = profile_from_curve(black_box(&traj)).unwrap();
            extract_f_limits(&p).unwrap()
        })
    });
    g.finish();
}

fn families(c: &mut Criterion) {
    let mut g = c.benchmark_group("families");
    g.sample_size(10);
    g.bench_function("odd_a10", |b| b.iter(|| odd_family(10.0, black_box(0.956), DEFAULT_S_MAX).unwrap()));
    g.bench_function("mixed_a3", |b| {
        b.iter(|| mixed_family(3.0, black_box(1.8), 1.0, DEFAULT_S_MAX).unwrap())
    });
    g.finish();
}

criterion_group!(benches, curve, trace, families);
criterion_main!(benches);
