use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use sidekick_bench::{default_instance, planned, ring_matrix, traced};
use sidekick_core::hybrid::{plan_hybrid, FleetConfig};
use sidekick_core::netmodel::{run_cam_traffic, CamTraffic, ChannelConfig, MacModel};
use sidekick_core::routing::{tsp_exact, tsp_heuristic};
use sidekick_core::simcore::simulate;
use sidekick_core::Solver;

fn bench_tsp(c: &mut Criterion) {
    let mut g = c.benchmark_group("tsp");
    for n in [8, 10, 12] {
        let m = ring_matrix(n);
        g.bench_with_input(BenchmarkId::new("exact", n), &m, |b, m| b.iter(|| tsp_exact(black_box(m), 0, true)));
    }
    for n in [12, 50, 100] {
        let m = ring_matrix(n);
        g.bench_with_input(BenchmarkId::new("heuristic", n), &m, |b, m| {
            b.iter(|| tsp_heuristic(black_box(m), 0, true))
        });
    }
    g.finish();
}

fn bench_plan(c: &mut Criterion) {
    let (scenario, set) = default_instance();
    let mut g = c.benchmark_group("plan_hybrid");
    for k in [0, 2, 5] {
        let fleet = FleetConfig::default().with_drones(k);
        g.bench_with_input(BenchmarkId::from_parameter(k), &fleet, |b, fleet| {
            b.iter(|| plan_hybrid(&scenario, &set, fleet, true, Solver::Heuristic))
        });
    }
    g.finish();
}

fn bench_simulate(c: &mut Criterion) {
    let (scenario, plan, fleet) = planned(5);
    c.bench_function("simulate_5_drones", |b| b.iter(|| simulate(&scenario, black_box(&plan), &fleet)));
}

fn bench_netsim(c: &mut Criterion) {
    let (scenario, trace) = traced(5);
    let mut g = c.benchmark_group("netsim");
    g.sample_size(10);
    for mac in MacModel::all() {
        g.bench_function(mac.name(), |b| {
            b.iter(|| run_cam_traffic(&trace, &scenario, &mac, &ChannelConfig::default(), &CamTraffic::default(), 1))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_tsp, bench_plan, bench_simulate, bench_netsim);
criterion_main!(benches);
