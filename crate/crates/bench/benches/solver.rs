use criterion::{criterion_group, criterion_main, Criterion};
use magnomech_bench::{detuning_sweep, operating_point};
use magnomech_core::lyapunov::{random_stable_system, solve_lyapunov};
use magnomech_core::sweep::{analyze, run_sweep};
use std::hint::black_box;

fn lyapunov(c: &mut Criterion) {
    let (a, f) = random_stable_system(7).unwrap();
    c.bench_function("lyapunov_solve", |b| {
        b.iter(|| solve_lyapunov(black_box(&a), black_box(&f)).unwrap())
    });
}

fn point(c: &mut Criterion) {
    let p = operating_point();
    c.bench_function("analyze_point", |b| {
        b.iter(|| analyze(black_box(&p)).unwrap())
    });
}

fn sweep(c: &mut Criterion) {
    let spec = detuning_sweep(500);
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("detuning_500_bipartite", |b| {
        b.iter(|| run_sweep(black_box(&spec)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, lyapunov, point, sweep);
criterion_main!(benches);
