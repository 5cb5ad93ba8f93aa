use criterion::{criterion_group, criterion_main, Criterion};
use ringtel_core::*;
use std::hint::black_box;

fn sweep() -> Sweep {
    let pair = CoupledPair::new(default_reader(), ring_coil(8, 29e6).unwrap(), 1e-3).unwrap();
    synthesize_sweep(
        &SweepConfig::default(),
        &pair,
        &BridgeConfig::default(),
        &DisturbanceModel::default(),
        0.0,
    )
    .unwrap()
}

fn kernels(c: &mut Criterion) {
    let pair = CoupledPair::new(default_reader(), ring_coil(8, 29e6).unwrap(), 1e-3).unwrap();
    let cfg = SweepConfig::default();
    let bridge = BridgeConfig::default();
    let disturb = DisturbanceModel::default();
    c.bench_function("synthesize_sweep", |b| {
        b.iter(|| synthesize_sweep(black_box(&cfg), &pair, &bridge, &disturb, 0.4).unwrap())
    });

    let s = sweep();
    c.bench_function("fit_baseline", |b| {
        b.iter(|| fit_baseline(black_box(&s), 3).unwrap())
    });
    let det = DetectorConfig::default();
    c.bench_function("detect_peaks", |b| {
        b.iter(|| detect_peaks(black_box(&s), &det).unwrap())
    });
    c.bench_function("design_dca", |b| {
        b.iter(|| design_dca(black_box(3.7e-6), 26.93e6, 18, None, Rounding::Exact).unwrap())
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);
