use std::hint::black_box;

use chlab_core::fup::{cantor_discrete, discrete_norm_with, NormMethod, NormOptions, PorousSet};
use chlab_core::minkowski::random_algebra_element;
use chlab_core::symplectic::{rectangle_series, straighten, symplectic_form_at, CotangentPoint, Slab};
use chlab_core::words::{count_sets, enumerate_counts, Threshold};
use chlab_core::{Sign, SpaceDim};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn algebra(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("expm");
    for n in [2, 5] {
        let y = random_algebra_element(SpaceDim::new(n).unwrap(), 1.0, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(n), &y, |b, y| b.iter(|| black_box(y).exp()));
    }
    group.finish();
}

fn symplectic(c: &mut Criterion) {
    let base = CotangentPoint::base_point(SpaceDim::new(2).unwrap());
    c.bench_function("symplectic_form_n2", |b| b.iter(|| symplectic_form_at(black_box(&base), 1e-4).unwrap()));
    let map = straighten(&base).unwrap();
    c.bench_function("rectangle_series_alpha_0.1", |b| {
        b.iter(|| rectangle_series(&map, 0.1, Sign::Minus, Slab::Thin, 0.5, 16).unwrap())
    });
}

fn fup(c: &mut Criterion) {
    let mut group = c.benchmark_group("discrete_norm");
    group.sample_size(10);
    for k in [5, 6, 7] {
        let set = cantor_discrete(k).unwrap();
        for method in [NormMethod::DenseSvd, NormMethod::PowerIteration] {
            let opts = NormOptions { method: Some(method), ..Default::default() };
            let id = BenchmarkId::new(method.as_str(), set.grid_size());
            group.bench_with_input(id, &set, |b, s| b.iter(|| discrete_norm_with(s, s, opts).unwrap()));
        }
    }
    group.finish();

    let set = PorousSet::cantor_iterate(3, &[0, 2], 7).unwrap();
    c.bench_function("is_porous_cantor_depth7", |b| {
        b.iter(|| set.is_porous(0.1, 3f64.powi(-6), 1.0).unwrap())
    });
}

fn words(c: &mut Criterion) {
    let alpha = Threshold::new(1, 4);
    c.bench_function("count_sets_n0_36", |b| b.iter(|| count_sets(black_box(36), alpha).unwrap()));
    let mut group = c.benchmark_group("enumerate_counts");
    group.sample_size(10);
    group.bench_function("n0_5", |b| b.iter(|| enumerate_counts(black_box(5), alpha).unwrap()));
    group.finish();
}

criterion_group!(benches, algebra, symplectic, fup, words);
criterion_main!(benches);
