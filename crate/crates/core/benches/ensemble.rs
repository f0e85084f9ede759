use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fluorospec::config::preset_params;
use fluorospec::exec::Execution;
use fluorospec::spectrum::{linear_grid, mc_spectrum_with, McSpectrumConfig};
use fluorospec::trajectories::{simulate_physical, simulate_reference, SimConfig};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn sim_config(execution: Execution) -> SimConfig {
    SimConfig {
        dt: 1e-3,
        t_final: 5.0,
        t_burn: 0.0,
        n_traj: 32,
        execution,
        ..Default::default()
    }
}

fn ensembles(c: &mut Criterion) {
    let p = preset_params("fig3_feedback").unwrap();
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for (name, mode) in MODES {
        let cfg = sim_config(mode);
        group.bench_with_input(BenchmarkId::new("physical", name), &cfg, |b, cfg| {
            b.iter(|| simulate_physical(black_box(&p), cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("reference", name), &cfg, |b, cfg| {
            b.iter(|| simulate_reference(black_box(&p), cfg).unwrap())
        });
    }
    group.finish();
}

fn periodogram(c: &mut Criterion) {
    let p = preset_params("fig3_nofeedback").unwrap();
    let cfg = SimConfig {
        dt: 1e-2,
        t_final: 120.0,
        t_burn: 20.0,
        n_traj: 16,
        record_stride: 2,
        ..Default::default()
    };
    let ens = simulate_physical(&p, &cfg).unwrap();
    let grid = linear_grid(-4.0, 4.0, 161);
    let mut group = c.benchmark_group("mc_spectrum");
    group.sample_size(10);
    for (name, mode) in MODES {
        let mc = McSpectrumConfig {
            execution: mode,
            ..Default::default()
        };
        group.bench_function(name, |b| b.iter(|| mc_spectrum_with(black_box(&ens), &grid, &mc).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, ensembles, periodogram);
criterion_main!(benches);
