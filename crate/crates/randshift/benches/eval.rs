use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use randshift::cocycle::{
    log_product_full_fast, log_product_series_naive, Cocycle,
};
use randshift::ergodic::{sample_point, sample_rng, symbol_stream, ErgodicSystem, SymbolStream};
use randshift::exec::{map_samples, map_samples_seq};
use randshift::weights::WeightSequence;
use std::hint::black_box;

fn harmonic_cocycle() -> Cocycle {
    Cocycle::new(vec![WeightSequence::HarmonicUp, WeightSequence::HarmonicDown]).unwrap()
}

fn random_stream(n: usize) -> SymbolStream {
    let sys = ErgodicSystem::bernoulli(vec![0.5, 0.5]).unwrap();
    let part = sys.implicit_partition().unwrap();
    let mut rng = sample_rng(1, 0);
    let pt = sample_point(&sys, &mut rng);
    symbol_stream(&sys, &part, &pt, n).unwrap()
}

/// Full-grid V: O(N^2) triangular evaluation vs the O(N log N) FFT path.
fn bench_evaluators(c: &mut Criterion) {
    let mut group = c.benchmark_group("full_grid_v");
    for &n in &[1024usize, 4096] {
        let cocycle = harmonic_cocycle();
        let s = random_stream(n);
        let grid: Vec<usize> = (1..=n).collect();
        group.bench_with_input(BenchmarkId::new("naive", n), &n, |b, _| {
            b.iter(|| {
                black_box(log_product_series_naive(&cocycle, &s, &grid).unwrap())
            })
        });
        group.bench_with_input(BenchmarkId::new("fft", n), &n, |b, _| {
            b.iter(|| black_box(log_product_full_fast(&cocycle, &s, n).unwrap()))
        });
    }
    group.finish();
}

/// Monte Carlo fan-out: rayon vs single-threaded, same per-sample work.
fn bench_fanout(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_fanout");
    group.sample_size(10);
    let samples = 32usize;
    let horizon = 16_384usize;
    let cocycle = harmonic_cocycle();
    let sys = ErgodicSystem::bernoulli(vec![0.5, 0.5]).unwrap();
    let part = sys.implicit_partition().unwrap();
    let work = |i: usize| {
        let mut rng = sample_rng(7, i as u64);
        let pt = sample_point(&sys, &mut rng);
        let s = symbol_stream(&sys, &part, &pt, horizon).unwrap();
        log_product_full_fast(&cocycle, &s, horizon).unwrap()[horizon - 1]
    };
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(map_samples(samples, work)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(map_samples_seq(samples, work)))
    });
    group.finish();
}

criterion_group!(benches, bench_evaluators, bench_fanout);
criterion_main!(benches);
