//! Hot-path benchmarks: the contrast argmax, full path construction,
//! end-to-end detection, and the scale estimator.

use cpd_bench::{detector_seed, noise_series, staircase_series};
use cpd_core::estimation::mad;
use cpd_core::{cusum_argmax, detect, wbs2_solution_path, SdllConfig, Wbs2Config};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn bench_cusum_argmax(c: &mut Criterion) {
    let mut group = c.benchmark_group("cusum_argmax");
    for t_len in [1_000usize, 10_000, 100_000] {
        let x = noise_series(t_len, 11);
        group.throughput(Throughput::Elements(t_len as u64));
        group.bench_with_input(BenchmarkId::from_parameter(t_len), &x, |b, x| {
            b.iter(|| cusum_argmax(x, 1, x.len()).unwrap())
        });
    }
    group.finish();
}

fn bench_path(c: &mut Criterion) {
    let mut group = c.benchmark_group("solution_path");
    group.sample_size(10);
    for t_len in [1_000usize, 10_000, 100_000] {
        let x = staircase_series(t_len, 100, 2.0, 17);
        let cfg = Wbs2Config {
            seed: detector_seed(t_len as u64),
            ..Default::default()
        };
        group.throughput(Throughput::Elements(t_len as u64));
        group.bench_with_input(BenchmarkId::from_parameter(t_len), &x, |b, x| {
            b.iter(|| wbs2_solution_path(x, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_detect(c: &mut Criterion) {
    let mut group = c.benchmark_group("detect");
    group.sample_size(20);
    let x = staircase_series(10_000, 250, 1.5, 23);
    let wbs2 = Wbs2Config {
        seed: detector_seed(1),
        ..Default::default()
    };
    let sdll = SdllConfig::default();
    group.bench_function("staircase_10k", |b| {
        b.iter(|| detect(&x, &wbs2, &sdll).unwrap())
    });
    group.finish();
}

fn bench_mad(c: &mut Criterion) {
    let mut group = c.benchmark_group("scale_estimate");
    let x = noise_series(100_000, 29);
    group.throughput(Throughput::Elements(100_000));
    group.bench_function("mad_100k", |b| b.iter(|| mad(&x).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_cusum_argmax, bench_path, bench_detect, bench_mad);
criterion_main!(benches);
