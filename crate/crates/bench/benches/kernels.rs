use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use blowup_bench::{bump_scenario, soliton_sum};
use blowup_core::classifier::cone_test;
use blowup_core::model::{energy, h_norm};
use blowup_core::solitons::{fit_multi, fit_single, select_k, K_THRESHOLD};
use blowup_core::solver::{blowup_curve, simulate};

fn functionals(c: &mut Criterion) {
    let mut group = c.benchmark_group("functionals");
    for n in [201, 801, 3201] {
        let frame = soliton_sum(&[0.3], n);
        group.bench_with_input(BenchmarkId::new("energy", n), &frame, |b, f| b.iter(|| energy(black_box(f))));
        group.bench_with_input(BenchmarkId::new("h_norm", n), &frame, |b, f| b.iter(|| h_norm(black_box(f))));
    }
    group.finish();
}

fn fits(c: &mut Criterion) {
    let single = soliton_sum(&[0.4], 201);
    c.bench_function("fit_single", |b| b.iter(|| fit_single(black_box(&single)).unwrap()));
    let mut group = c.benchmark_group("fit_multi");
    for zeta in [&[-1.0, 1.0][..], &[-1.5, 0.0, 1.5][..]] {
        let frame = soliton_sum(zeta, 201);
        group.bench_with_input(BenchmarkId::from_parameter(zeta.len()), &frame, |b, f| {
            b.iter(|| fit_multi(black_box(f), zeta.len(), None).unwrap())
        });
    }
    group.finish();
    let pair = soliton_sum(&[-1.0, 1.0], 201);
    c.bench_function("select_k", |b| b.iter(|| select_k(black_box(&pair), 3, K_THRESHOLD).unwrap()));
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    for nodes in [151, 301] {
        let scenario = bump_scenario(nodes);
        group.bench_with_input(BenchmarkId::new("bump", nodes), &scenario, |b, s| {
            b.iter(|| simulate(black_box(s)).unwrap())
        });
    }
    let history = simulate(&bump_scenario(301)).unwrap();
    group.bench_function("blowup_curve", |b| b.iter(|| blowup_curve(black_box(&history)).unwrap()));
    let curve = blowup_curve(&history).unwrap();
    group.bench_function("cone_test", |b| b.iter(|| cone_test(black_box(&curve), 1.5, 0.25).unwrap()));
    group.finish();
}

criterion_group!(benches, functionals, fits, solver);
criterion_main!(benches);
