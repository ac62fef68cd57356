use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fso_adapt::adaptation::{compute_boundaries, sweep_with, SchemeTemplate};
use fso_adapt::link::LinkBudget;
use fso_adapt::simulator::{run_with, SimConfig, SimMode};
use fso_adapt::turbulence::{Fading, TurbulenceParams};
use fso_adapt::Execution;

fn simulate(c: &mut Criterion) {
    let budget = LinkBudget::from_db(15.0).unwrap();
    let channel: Fading = TurbulenceParams::new(0.3).unwrap().into();
    let config = SimConfig {
        blocks: 1_000_000,
        symbols_per_block: 1,
        seed: 42,
        mode: SimMode::Adaptive(compute_boundaries(5, 1e-3, budget).unwrap()),
        channel,
        budget,
    };
    let mut group = c.benchmark_group("simulate_1e6");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(name, |b| b.iter(|| run_with(black_box(&config), exec).unwrap()));
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let channel: Fading = TurbulenceParams::new(0.5).unwrap().into();
    let template = SchemeTemplate::new(5, 1e-3);
    let grid: Vec<f64> = (0..=300).map(|k| f64::from(k) * 0.1).collect();
    let mut group = c.benchmark_group("sweep_301");
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(name, |b| {
            b.iter(|| sweep_with(black_box(&template), &channel, &grid, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simulate, sweep);
criterion_main!(benches);
