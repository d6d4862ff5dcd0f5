//! Parallel versus single-threaded throughput of the batch workloads.
//! The "sequential" case runs the same code inside a one-thread rayon pool,
//! which matches the `--no-default-features` build up to scheduling overhead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand_distr::{Distribution, Normal};
use rayon::ThreadPoolBuilder;
use siscatter::event_sim::{coincidence_histogram, rng_for, EventModel};
use siscatter::fitting::{fit_power_decomposition, Dataset};
use siscatter::{BandPair, Instrument, PumpConfig, WaveguideParams};
use std::hint::black_box;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    vec![
        ("sequential", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", ThreadPoolBuilder::new().num_threads(all).build().unwrap()),
    ]
}

fn reference_model(kappa_factor: f64) -> EventModel {
    let wg = WaveguideParams::default();
    let wg = wg.with_kappa(kappa_factor * wg.kappa);
    let pump = PumpConfig::default();
    let inst = Instrument::reference_setup(&wg, pump.carrier_wavelength);
    EventModel::new(&wg, &pump, &BandPair::reference_setup(), &inst, None).unwrap()
}

fn monte_carlo_batches(c: &mut Criterion) {
    let model = reference_model(1.0);
    let mut group = c.benchmark_group("monte_carlo_16_batches");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| black_box(model.simulate_batches(0.5, 16, 7).unwrap())))
        });
    }
    group.finish();
}

fn kappa_sweep(c: &mut Criterion) {
    let factors = [0.0, 0.5, 1.0, 2.0, 4.0];
    let mut group = c.benchmark_group("kappa_sweep_snr");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pool.install(|| {
                    siscatter::par::map_slice(&factors, |&f| {
                        let stream = reference_model(f).simulate(2.0, 3, 0).unwrap();
                        coincidence_histogram(&stream, 1e-9, 31e-9).unwrap().peak()
                    })
                })
            })
        });
    }
    group.finish();
}

fn coverage_fits(c: &mut Criterion) {
    let powers: Vec<f64> = (1..=20).map(|i| i as f64 * 0.1e-3).collect();
    let unit = Normal::new(0.0, 1.0).unwrap();
    let datasets: Vec<Dataset> = (0..200)
        .map(|seed| {
            let mut rng = rng_for(seed, 0);
            let ys: Vec<f64> =
                powers.iter().map(|&p| 1.7e9 * p * p + 4.1e6 * p + 150.0 * unit.sample(&mut rng)).collect();
            Dataset::from_xys(&powers, &ys, &vec![150.0; powers.len()]).unwrap()
        })
        .collect();
    let mut group = c.benchmark_group("power_fits_200");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pool.install(|| siscatter::par::map_slice(&datasets, |d| fit_power_decomposition(d).unwrap().params))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo_batches, kappa_sweep, coverage_fits);
criterion_main!(benches);
