//! Parallel-vs-sequential benchmark for the latitude phase scan that
//! dominates IGP grids: one biorthogonal spectral pass plus per-level loop
//! phases per latitude column.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ptigp::path::latitude_circle;
use ptigp::ptsystem::default_two_level;
use ptigp::thermal::loop_level_phases;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn column(theta: f64, samples: usize) -> f64 {
    let sys = default_two_level();
    let path = latitude_circle(theta, samples, TAU).expect("latitude path");
    let phases = loop_level_phases(&sys, &path).expect("phases");
    phases.theta1.iter().map(|t| t.re + t.im).sum()
}

fn bench_scan(c: &mut Criterion) {
    let thetas: Vec<f64> = (0..24).map(|k| 0.2 + 2.7 * k as f64 / 23.0).collect();
    let samples = 256;

    let mut group = c.benchmark_group("latitude-scan");
    group.sample_size(10);

    group.bench_with_input(
        BenchmarkId::new("parallel", thetas.len()),
        &thetas,
        |b, thetas| {
            b.iter(|| {
                let sums = ptigp::scan_map(thetas, |t| column(*t, samples));
                sums.iter().sum::<f64>()
            })
        },
    );

    group.bench_with_input(
        BenchmarkId::new("sequential", thetas.len()),
        &thetas,
        |b, thetas| {
            b.iter(|| {
                let sums = ptigp::scan_map_sequential(thetas, |t| column(*t, samples));
                sums.iter().sum::<f64>()
            })
        },
    );

    group.finish();
}

criterion_group!(benches, bench_scan);
criterion_main!(benches);
