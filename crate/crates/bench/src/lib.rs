//! Fixtures shared by the benchmarks.

use sidekick_core::hybrid::{plan_hybrid, FleetConfig, HybridPlan};
use sidekick_core::jobs::generate_delivery_sets;
use sidekick_core::routing::CostMatrix;
use sidekick_core::scenario::{generate_from_params, GridParams};
use sidekick_core::simcore::{simulate, DeliveryTrace};
use sidekick_core::{DeliverySet, Scenario, Solver};

/// Default grid world with its first default-sized delivery set.
pub fn default_instance() -> (Scenario, DeliverySet) {
    let scenario = generate_from_params(&GridParams::default()).expect("default grid");
    let set = generate_delivery_sets(&scenario, 1, 15, 5, 1).expect("default jobs").remove(0);
    (scenario, set)
}

pub fn planned(drones: usize) -> (Scenario, HybridPlan, FleetConfig) {
    let (scenario, set) = default_instance();
    let fleet = FleetConfig::default().with_drones(drones);
    let plan = plan_hybrid(&scenario, &set, &fleet, true, Solver::Heuristic).expect("plannable");
    (scenario, plan, fleet)
}

pub fn traced(drones: usize) -> (Scenario, DeliveryTrace) {
    let (scenario, plan, fleet) = planned(drones);
    let trace = simulate(&scenario, &plan, &fleet).expect("simulates");
    (scenario, trace)
}

/// Points on a circle with a deterministic wobble, so tours are not trivial.
pub fn ring_matrix(n: usize) -> CostMatrix {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let a = i as f64 * 2.399_963;
            let r = 500.0 + 137.0 * ((i * 7919) % 13) as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    CostMatrix::euclidean(&pts)
}
