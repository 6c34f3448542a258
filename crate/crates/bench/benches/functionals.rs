use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use quantile_core::brownian_law::{quantile_law, BrownianSpec, DEFAULT_QUAD_TOL};
use quantile_core::generators::{gen_bm_grid, gen_coupled, gen_walk, IncrementLaw, WalkSpec};
use quantile_core::{hitting_time, j1_distance, occupation_cdf, quantile, RngConfig, SearchParams};

fn functionals(c: &mut Criterion) {
    let mut g = c.benchmark_group("quantile");
    for n in [1_000, 10_000] {
        let walk = gen_walk(&WalkSpec::scalar(n, IncrementLaw::Rademacher, 1.0).unwrap(), &RngConfig::new(1, 0))
            .unwrap()
            .coordinate(0);
        let bm = gen_bm_grid(&WalkSpec::scalar(n, IncrementLaw::Gaussian, 1.0).unwrap(), &RngConfig::new(1, 1))
            .unwrap()
            .coordinate(0);
        g.bench_with_input(BenchmarkId::new("walk", n), &walk, |b, p| b.iter(|| quantile(p, 1.0, black_box(0.5))));
        g.bench_with_input(BenchmarkId::new("bm_grid", n), &bm, |b, p| b.iter(|| quantile(p, 1.0, black_box(0.5))));
        g.bench_with_input(BenchmarkId::new("bm_grid_cdf", n), &bm, |b, p| b.iter(|| occupation_cdf(p, black_box(1.0))));
        g.bench_with_input(BenchmarkId::new("bm_grid_tau", n), &bm, |b, p| b.iter(|| hitting_time(p, 1.0, black_box(0.5))));
    }
    g.finish();
}

fn generators(c: &mut Criterion) {
    let spec = WalkSpec::scalar(10_000, IncrementLaw::Rademacher, 1.0).unwrap();
    c.bench_function("gen_walk_10000", |b| b.iter(|| gen_walk(&spec, black_box(&RngConfig::new(2, 0)))));
}

fn j1(c: &mut Criterion) {
    let mut g = c.benchmark_group("j1");
    g.sample_size(10);
    for n in [100, 1_000] {
        let spec = WalkSpec::scalar(n, IncrementLaw::Gaussian, 1.0).unwrap();
        let (x, y) = gen_coupled(&spec, 4, &RngConfig::new(3, 0)).unwrap();
        let (x, y) = (x.coordinate(0), y.coordinate(0));
        g.bench_with_input(BenchmarkId::new("coupled", n), &(x, y), |b, (x, y)| {
            b.iter(|| j1_distance(x, y, 2, &SearchParams::default()))
        });
    }
    g.finish();
}

fn law(c: &mut Criterion) {
    let law = quantile_law(&BrownianSpec::scalar(1.0, 1.0).unwrap(), 0.5, DEFAULT_QUAD_TOL).unwrap();
    c.bench_function("law_cdf", |b| b.iter(|| law.cdf(black_box(0.3))));
    c.bench_function("law_pdf", |b| b.iter(|| law.pdf(black_box(0.3))));
}

criterion_group!(benches, functionals, generators, j1, law);
criterion_main!(benches);
