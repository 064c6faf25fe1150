//! Criterion comparison of the attention variants, sequential vs rayon.
//!
//! Run with `cargo bench -p mvattn`; sizes stay small so the suite also
//! finishes quickly in `cargo test`'s smoke mode.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mvattn::attention::{
    dense_multiview_attention, epipolar_attention, row_wise_attention, AttentionConfig,
    FeatureGrid, ProjectionWeights,
};
use mvattn::geometry::CanonicalRig;

const VIEWS: usize = 6;
const CHANNELS: usize = 16;

fn fixture(size: usize) -> (FeatureGrid, ProjectionWeights, AttentionConfig) {
    (
        FeatureGrid::random(VIEWS, size, CHANNELS, 7).unwrap(),
        ProjectionWeights::seeded(CHANNELS, 8),
        AttentionConfig::single_head(CHANNELS).unwrap(),
    )
}

fn bench_dense(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense");
    group.sample_size(10).measurement_time(Duration::from_secs(3));
    for size in [8usize, 16] {
        let (grid, w, cfg) = fixture(size);
        group.bench_with_input(BenchmarkId::new("seq", size), &size, |b, _| {
            b.iter(|| dense_multiview_attention(&grid, &w, &cfg).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("par", size), &size, |b, _| {
            b.iter(|| mvattn::attention::par::dense_multiview_attention(&grid, &w, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_row_wise(c: &mut Criterion) {
    let mut group = c.benchmark_group("row_wise");
    group.sample_size(10).measurement_time(Duration::from_secs(3));
    for size in [8usize, 16, 32] {
        let (grid, w, cfg) = fixture(size);
        group.bench_with_input(BenchmarkId::new("seq", size), &size, |b, _| {
            b.iter(|| row_wise_attention(&grid, &w, &cfg).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("par", size), &size, |b, _| {
            b.iter(|| mvattn::attention::par::row_wise_attention(&grid, &w, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_epipolar(c: &mut Criterion) {
    let mut group = c.benchmark_group("epipolar");
    group.sample_size(10).measurement_time(Duration::from_secs(3));
    let views = CanonicalRig::new(0.0, 1.0).unwrap().views().to_vec();
    for size in [8usize, 16] {
        let (grid, w, cfg) = fixture(size);
        let k = size;
        group.bench_with_input(BenchmarkId::new("seq", size), &size, |b, _| {
            b.iter(|| epipolar_attention(&grid, &views, k, &w, &cfg).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("par", size), &size, |b, _| {
            b.iter(|| {
                mvattn::attention::par::epipolar_attention(&grid, &views, k, &w, &cfg).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_dense, bench_row_wise, bench_epipolar);
criterion_main!(benches);
