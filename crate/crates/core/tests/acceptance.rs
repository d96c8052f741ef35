//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Failures are reported, not fatal, so the regular test run stays usable
//! while a criterion is out of reach. Set `ACCEPTANCE_STRICT=1` to turn any
//! FAIL into a nonzero exit.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use sidekick_core::experiment::{run_experiment, ExperimentConfig, ExperimentOutcome};
use sidekick_core::hybrid::{plan_hybrid, plan_hybrid_levels, FleetConfig};
use sidekick_core::jobs::{generate_delivery_sets, ipd_distribution, ks_statistic};
use sidekick_core::metrics::{self, Group, SummaryRow};
use sidekick_core::netmodel::{check_requirements, run_cam_traffic, CamTraffic, ChannelConfig, MacModel, RequirementsProfile};
use sidekick_core::routing::{tsp_exact, tsp_heuristic, CostMatrix};
use sidekick_core::scenario::{generate_from_params, generate_grid_scenario, GridParams, Point};
use sidekick_core::simcore::simulate;
use sidekick_core::Solver;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("[{}] {id}. {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn summary_value(rows: &[SummaryRow], drones: usize, prioritized: bool, g: Group) -> f64 {
    rows.iter()
        .find(|r| r.drones == drones && r.prioritized == prioritized && r.category == g)
        .map(|r| r.mean_s)
        .expect("summary row present")
}

fn capacity(rows: &[SummaryRow], drones: usize, prioritized: bool) -> f64 {
    rows.iter()
        .find(|r| r.drones == drones && r.prioritized == prioritized && r.category == Group::All)
        .map(|r| r.capacity_20min)
        .expect("summary row present")
}

fn summary_csv(out: &ExperimentOutcome) -> Vec<u8> {
    let mut buf = Vec::new();
    metrics::write_summary_csv(&out.summary, &mut buf).unwrap();
    buf
}

fn prioritization_benefit(r: &mut Report) {
    let cfg = ExperimentConfig {
        drones: vec![0],
        models: vec![],
        ..ExperimentConfig::default()
    };
    let t = Instant::now();
    let out = run_experiment(&cfg).unwrap();
    let took = t.elapsed();
    let base = summary_value(&out.summary, 0, false, Group::Medical);
    let prio = summary_value(&out.summary, 0, true, Group::Medical);
    let ratio = prio / base;
    r.line(
        1,
        "prioritization benefit",
        out.failures() == 0 && ratio <= 0.60 && took < Duration::from_secs(60),
        format!(
            "medical mean {prio:.1} s vs {base:.1} s, ratio {ratio:.3} (<= 0.600), {:.1} s (< 60 s)",
            took.as_secs_f64()
        ),
    );
}

fn sweep_criteria(r: &mut Report) {
    let cfg = ExperimentConfig::default();
    let t = Instant::now();
    let a = run_experiment(&cfg).unwrap();
    let took = t.elapsed();
    let rows = &a.summary;

    // criterion 2: the unprioritized truck-only fleet is the baseline
    let baseline = summary_value(rows, 0, false, Group::Standard);
    let excess: Vec<f64> = (0..=5)
        .map(|k| summary_value(rows, k, true, Group::Standard) / baseline - 1.0)
        .collect();
    let monotone = excess.windows(2).all(|w| w[1] <= w[0] + 0.05);
    let ok = a.failures() == 0 && excess[0] > 0.0 && monotone && excess[5] <= 0.10;
    let shown: Vec<String> = excess.iter().map(|e| format!("{:+.3}", e)).collect();
    r.line(
        2,
        "standard penalty and drone compensation",
        ok,
        format!(
            "standard excess over truck-only baseline by drones 0..5 = [{}] (first > 0, steps <= +0.05, last <= 0.10)",
            shown.join(", ")
        ),
    );

    // criterion 3
    let mut detail = Vec::new();
    let mut ok = true;
    for p in [false, true] {
        let caps: Vec<f64> = (0..=5).map(|k| capacity(rows, k, p)).collect();
        let drops: Vec<f64> = caps.windows(2).map(|w| w[0] - w[1]).filter(|d| *d > 0.0).collect();
        ok &= drops.len() <= 1 && drops.iter().all(|d| *d <= 0.02);
        let shown: Vec<String> = caps.iter().map(|c| format!("{c:.3}")).collect();
        detail.push(format!("{}: [{}]", if p { "prioritized" } else { "baseline" }, shown.join(", ")));
    }
    r.line(3, "capacity trend", ok, format!("capacity within 20 min by drones 0..5, {}", detail.join("; ")));

    // criterion 9
    let b = run_experiment(&cfg).unwrap();
    let same = summary_csv(&a) == summary_csv(&b);
    r.line(
        9,
        "determinism",
        same,
        format!(
            "two default sweeps ({} runs each, {:.1} s) give {} summary CSVs",
            a.manifest.runs.len(),
            took.as_secs_f64(),
            if same { "byte-identical" } else { "different" }
        ),
    );
}

fn network_ordering(r: &mut Report) {
    let cfg = ExperimentConfig::default();
    let scenario = generate_from_params(&cfg.grid).unwrap();
    let set = generate_delivery_sets(&scenario, 1, cfg.per_set, cfg.medical, cfg.jobs_seed())
        .unwrap()
        .remove(0);
    let fleet = FleetConfig::default().with_drones(5);
    let plan = plan_hybrid(&scenario, &set, &fleet, true, Solver::Heuristic).unwrap();
    let trace = simulate(&scenario, &plan, &fleet).unwrap();
    let members = 1 + trace.trajectories.drone_count;
    let run = |m: MacModel| {
        run_cam_traffic(&trace, &scenario, &m, &ChannelConfig::default(), &CamTraffic::default(), 7).unwrap()
    };
    let (cen, csma, sps) = (run(MacModel::centralized()), run(MacModel::csma()), run(MacModel::sps()));
    let med = |s: &sidekick_core::netmodel::NetStats| s.latency_quantile(0.5).unwrap();
    let latency_order = med(&cen) > med(&csma) && med(&csma) > med(&sps);
    let pdr_order = sps.pdr() >= csma.pdr() && csma.pdr() >= 0.99;
    let req = check_requirements(&cen, &RequirementsProfile::default());
    r.line(
        4,
        "network ordering",
        latency_order && pdr_order && members <= 7,
        format!(
            "median ms centralized {:.3} / csma {:.3} / sps {:.3} (want decreasing: {}); pdr sps {:.4} >= csma {:.4} >= 0.99: {}; \
             {members} fleet members, {} CAMs; centralized p95 {:.2} ms vs 50 ms bound: {}",
            med(&cen),
            med(&csma),
            med(&sps),
            latency_order,
            sps.pdr(),
            csma.pdr(),
            pdr_order,
            csma.sent(),
            req.p95_latency_ms,
            if req.cc_latency_ok { "within" } else { "exceeded" }
        ),
    );
}

/// Cost of every ordering of the non-start cities, by plain enumeration.
fn enumerate_optimum(m: &CostMatrix, closed: bool) -> f64 {
    fn rec(m: &CostMatrix, closed: bool, path: &mut Vec<usize>, left: &mut Vec<usize>, best: &mut f64) {
        if left.is_empty() {
            let mut c = 0.0;
            for w in path.windows(2) {
                c += m.get(w[0], w[1]);
            }
            if closed {
                c += m.get(*path.last().unwrap(), path[0]);
            }
            *best = best.min(c);
            return;
        }
        for i in 0..left.len() {
            let x = left.remove(i);
            path.push(x);
            rec(m, closed, path, left, best);
            path.pop();
            left.insert(i, x);
        }
    }
    let mut best = f64::INFINITY;
    rec(m, closed, &mut vec![0], &mut (1..m.len()).collect(), &mut best);
    best
}

fn tsp_oracle(r: &mut Report) {
    let t = Instant::now();
    let mut rng = Pcg64::seed_from_u64(2024);
    let (mut mismatches, mut ratio_sum) = (0, 0.0);
    let instances = 200;
    for i in 0..instances {
        let n = rng.random_range(2..=8);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)])
            .collect();
        let m = CostMatrix::euclidean(&pts);
        let closed = i % 2 == 0;
        let opt = enumerate_optimum(&m, closed);
        let (order, exact) = tsp_exact(&m, 0, closed).unwrap();
        let recomputed = m.tour_cost(&order, closed);
        if (exact - opt).abs() > 1e-9 * opt.max(1.0) || (recomputed - exact).abs() > 1e-9 * opt.max(1.0) {
            mismatches += 1;
        }
        let (_, heur) = tsp_heuristic(&m, 0, closed).unwrap();
        ratio_sum += if opt > 0.0 { heur / opt } else { 1.0 };
    }
    let mean_ratio = ratio_sum / instances as f64;
    let took = t.elapsed();
    r.line(
        5,
        "TSP oracle equivalence",
        mismatches == 0 && mean_ratio <= 1.10 && took < Duration::from_secs(30),
        format!(
            "{instances} instances n <= 8: {mismatches} exact mismatches, heuristic mean ratio {mean_ratio:.4} (<= 1.10), {:.2} s (< 30 s)",
            took.as_secs_f64()
        ),
    );
}

struct Instance {
    scenario: sidekick_core::Scenario,
    set: sidekick_core::DeliverySet,
    fleet: FleetConfig,
    prioritize: bool,
}

fn random_instance(rng: &mut Pcg64, seed: u64) -> Instance {
    let rows = rng.random_range(3..=6);
    let cols = rng.random_range(3..=6);
    let spacing = rng.random_range(80.0..160.0);
    let scenario = generate_grid_scenario(rows, cols, spacing, rng.random_range(1..=2), seed).unwrap();
    let per_set = rng.random_range(1..=10);
    let medical = rng.random_range(0..=per_set);
    let set = generate_delivery_sets(&scenario, 1, per_set, medical, seed).unwrap().remove(0);
    let fleet = FleetConfig {
        truck_speed: rng.random_range(5.0..12.0),
        truck_service: rng.random_range(0.0..90.0),
        drone_count: rng.random_range(0..=4),
        drone_speed: rng.random_range(6.0..20.0),
        drone_endurance: rng.random_range(60.0..1500.0),
        drone_service: rng.random_range(0.0..60.0),
        turnaround: rng.random_range(0.0..120.0),
        drone_altitude: rng.random_range(30.0..80.0),
    };
    Instance {
        scenario,
        set,
        fleet,
        prioritize: rng.random_bool(0.5),
    }
}

fn planner_agreement(r: &mut Report) {
    let mut rng = Pcg64::seed_from_u64(6);
    let (mut worst, mut jobs, mut sorties) = (0.0f64, 0, 0);
    let mut errors = 0;
    for i in 0..100 {
        let inst = random_instance(&mut rng, 6_000 + i);
        let fleet = FleetConfig {
            drone_count: rng.random_range(1..=4),
            ..inst.fleet
        };
        let plan = plan_hybrid(&inst.scenario, &inst.set, &fleet, inst.prioritize, Solver::Heuristic).unwrap();
        sorties += plan.sorties.len();
        match simulate(&inst.scenario, &plan, &fleet) {
            Ok(trace) => {
                for (j, t) in &plan.completion {
                    jobs += 1;
                    match trace.completion.get(j) {
                        Some(s) => worst = worst.max((s - t).abs()),
                        None => worst = f64::INFINITY,
                    }
                }
            }
            Err(_) => errors += 1,
        }
    }
    r.line(
        6,
        "planner-simulator agreement",
        errors == 0 && worst <= 1e-6,
        format!("100 hybrid plans, {jobs} jobs, {sorties} sorties: max |planned - simulated| = {worst:.3e} s (<= 1e-6), {errors} simulation errors"),
    );
}

fn plan_feasibility(r: &mut Report) {
    let mut rng = Pcg64::seed_from_u64(7);
    let (mut violations, mut plans, mut sorties) = (0, 0, 0);
    let mut first = None;
    for i in 0..1000 {
        let inst = random_instance(&mut rng, 7_000 + i);
        let levels = plan_hybrid_levels(&inst.scenario, &inst.set, &inst.fleet, inst.prioritize, Solver::Heuristic).unwrap();
        for plan in &levels {
            plans += 1;
            sorties += plan.sorties.len();
            if let Err(e) = plan.check_invariants(&inst.scenario, &inst.set) {
                violations += 1;
                first.get_or_insert(format!("instance {i}: {e}"));
            }
        }
    }
    r.line(
        7,
        "plan feasibility",
        violations == 0,
        format!(
            "1000 instances, {plans} plans across fleet sizes, {sorties} sorties: {violations} violations{}",
            first.map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    );
}

fn spatial_distribution(r: &mut Report) {
    let cfg = ExperimentConfig::default();
    let scenario = generate_from_params(&GridParams::default()).unwrap();
    let sets = generate_delivery_sets(&scenario, cfg.sets, cfg.per_set, cfg.medical, cfg.jobs_seed()).unwrap();
    let mut delivered = Vec::new();
    for s in &sets {
        delivered.extend(ipd_distribution(&s.targets().collect::<Vec<Point>>()).unwrap());
    }
    delivered.sort_by(f64::total_cmp);
    let buildings: Vec<Point> = scenario.buildings.iter().map(|b| b.access_point).collect();
    let reference = ipd_distribution(&buildings).unwrap();
    let d = ks_statistic(&delivered, &reference).unwrap();
    r.line(
        8,
        "spatial distribution",
        d <= 0.1,
        format!(
            "KS between {} per-set target distances and {} building distances = {d:.4} (<= 0.1)",
            delivered.len(),
            reference.len()
        ),
    );
}

fn main() {
    // `cargo test` forwards harness flags and name filters; honor the basics
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    if let Some(filter) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(filter.as_str()) {
            return;
        }
    }
    let mut r = Report { failed: 0 };
    prioritization_benefit(&mut r);
    sweep_criteria(&mut r);
    network_ordering(&mut r);
    tsp_oracle(&mut r);
    planner_agreement(&mut r);
    plan_feasibility(&mut r);
    spatial_distribution(&mut r);
    println!("acceptance: {} of 9 criteria failed", r.failed);
    if r.failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
