use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use sidekick_core::experiment::{run_experiment, ExperimentConfig};
use sidekick_core::hybrid::{plan_hybrid, HybridPlan};
use sidekick_core::jobs::{generate_delivery_sets, load_delivery_sets, save_delivery_sets};
use sidekick_core::metrics::{prioritization_effect, waiting_stats_from, Group};
use sidekick_core::netmodel::{
    check_requirements, run_cam_traffic, write_summary_csv, MacModel, NetStats, RequirementsProfile,
};
use sidekick_core::scenario::{generate_grid_scenario, load_scenario, save_scenario};
use sidekick_core::simcore::{simulate, DeliveryTrace};
use sidekick_core::{Error, Solver};

/// Truck-and-drone delivery planning, simulation and fleet-link evaluation.
#[derive(Parser)]
#[command(name = "sidekick", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Base seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment config (JSON) or a run manifest; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate or check a scenario file.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Generate delivery sets.
    #[command(subcommand)]
    Jobs(JobsCmd),
    /// Plan one delivery set.
    Plan(PlanArgs),
    /// Execute a plan and write its trace.
    Simulate(SimulateArgs),
    /// Evaluate CAM traffic over a trace.
    Netsim(NetsimArgs),
    /// Run a full sweep over sets, drone counts and prioritization.
    Sweep(SweepArgs),
    /// Summarize the outputs of a sweep.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum ScenarioCmd {
    Gen {
        #[arg(long, default_value_t = 8)]
        rows: usize,
        #[arg(long, default_value_t = 8)]
        cols: usize,
        #[arg(long, default_value_t = 100.0)]
        spacing: f64,
        #[arg(long, default_value_t = 2)]
        buildings_per_cell: usize,
    },
    Validate {
        path: PathBuf,
    },
}

#[derive(Subcommand)]
enum JobsCmd {
    Gen {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        sets: Option<usize>,
        #[arg(long)]
        per_set: Option<usize>,
        #[arg(long)]
        medical: Option<usize>,
    },
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    jobs: PathBuf,
    /// Delivery set id.
    #[arg(long, default_value_t = 0)]
    set: u32,
    #[arg(long, default_value_t = 0)]
    drones: usize,
    /// Serve medical jobs first.
    #[arg(long)]
    prioritize: bool,
    #[arg(long)]
    solver: Option<Solver>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    plan: PathBuf,
}

#[derive(Args)]
struct NetsimArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Trace JSON written by `simulate`.
    #[arg(long)]
    trace: PathBuf,
    /// Comma-separated MAC models: centralized, csma, sps.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    sets: Option<usize>,
    #[arg(long)]
    per_set: Option<usize>,
    #[arg(long)]
    medical: Option<usize>,
    /// Comma-separated drone counts.
    #[arg(long, value_delimiter = ',')]
    drones: Option<Vec<usize>>,
    /// Only the unprioritized schedule.
    #[arg(long, conflicts_with = "only_prioritized")]
    no_prioritize: bool,
    /// Only the medical-first schedule.
    #[arg(long)]
    only_prioritized: bool,
    /// Comma-separated MAC models, or `none`.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long)]
    net_sets: Option<usize>,
    #[arg(long)]
    solver: Option<Solver>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory written by `sweep`.
    dir: PathBuf,
}

/// Errors in the inputs, as opposed to failures while running.
fn is_config_error(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<Error>(),
        Some(Error::Parameter(_) | Error::Parse { .. } | Error::Io { .. } | Error::Scenario(_) | Error::Json(_))
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            if is_config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

/// Error chain joined by `: `, skipping causes already spelled out above them.
fn describe(e: &anyhow::Error) -> String {
    let mut out = e.to_string();
    let mut last = out.clone();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !last.contains(&text) {
            out.push_str(": ");
            out.push_str(&text);
        }
        last = text;
    }
    out
}

fn base_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn out_path(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let common = &cli.common;
    match cli.cmd {
        Cmd::Scenario(ScenarioCmd::Gen {
            rows,
            cols,
            spacing,
            buildings_per_cell,
        }) => {
            let cfg = base_config(common)?;
            let seed = common.seed.unwrap_or(cfg.grid.seed);
            let s = generate_grid_scenario(rows, cols, spacing, buildings_per_cell, seed)?;
            let out = out_path(common, "scenario.json");
            save_scenario(&s, &out)?;
            println!(
                "{}: {} nodes, {} edges, {} buildings",
                out.display(),
                s.graph.node_count(),
                s.graph.edge_count(),
                s.buildings.len()
            );
        }
        Cmd::Scenario(ScenarioCmd::Validate { path }) => {
            let s = load_scenario(&path)?;
            println!(
                "{}: valid ({} nodes, {} buildings)",
                path.display(),
                s.graph.node_count(),
                s.buildings.len()
            );
        }
        Cmd::Jobs(JobsCmd::Gen {
            scenario,
            sets,
            per_set,
            medical,
        }) => {
            let cfg = base_config(common)?;
            let s = load_scenario(&scenario)?;
            let generated = generate_delivery_sets(
                &s,
                sets.unwrap_or(cfg.sets),
                per_set.unwrap_or(cfg.per_set),
                medical.unwrap_or(cfg.medical),
                cfg.jobs_seed(),
            )?;
            let out = out_path(common, "jobs.json");
            save_delivery_sets(&generated, &out)?;
            println!("{}: {} sets", out.display(), generated.len());
        }
        Cmd::Plan(a) => {
            let cfg = base_config(common)?;
            let s = load_scenario(&a.scenario)?;
            let sets = load_delivery_sets(&s, &a.jobs)?;
            let Some(set) = sets.iter().find(|x| x.id == a.set) else {
                return Err(Error::Parameter(format!("no set {} in {}", a.set, a.jobs.display())).into());
            };
            let fleet = cfg.fleet.with_drones(a.drones);
            let plan = plan_hybrid(&s, set, &fleet, a.prioritize, a.solver.unwrap_or(cfg.solver))?;
            let out = out_path(common, "plan.json");
            plan.save(&out)?;
            println!(
                "{}: {} truck stops, {} sorties, total waiting {:.1} s, makespan {:.1} s",
                out.display(),
                plan.truck.stops.len(),
                plan.sorties.len(),
                plan.total_waiting(),
                plan.makespan()
            );
        }
        Cmd::Simulate(a) => {
            let s = load_scenario(&a.scenario)?;
            let plan = HybridPlan::load(&a.plan)?;
            let trace = simulate(&s, &plan, &plan.fleet)?;
            let dir = out_path(common, ".");
            create_dir(&dir)?;
            trace.save(&dir, "trace")?;
            println!(
                "{}: {} events, {} deliveries, tour ends at {:.1} s",
                dir.join("trace.csv").display(),
                trace.events.len(),
                trace.completion.len(),
                trace.end_time()
            );
        }
        Cmd::Netsim(a) => {
            let cfg = base_config(common)?;
            let s = load_scenario(&a.scenario)?;
            let trace = DeliveryTrace::load(&a.trace)?;
            let names = a.models.unwrap_or_else(|| cfg.models.clone());
            let models: Vec<MacModel> = names.iter().map(|n| n.parse()).collect::<Result<_, _>>()?;
            let dir = out_path(common, ".");
            create_dir(&dir)?;
            let profile = RequirementsProfile::default();
            let mut stats: Vec<NetStats> = Vec::new();
            for (i, m) in models.iter().enumerate() {
                let seed = sidekick_core::rng::mix_seed(cfg.seed, &[i as u64]);
                stats.push(run_cam_traffic(&trace, &s, m, &cfg.channel, &cfg.traffic, seed)?);
            }
            let mut msgs = Vec::new();
            for (i, st) in stats.iter().enumerate() {
                st.write_messages_csv(&mut msgs, i == 0)?;
            }
            write_file(&dir.join("net_messages.csv"), &msgs)?;
            let mut summary = Vec::new();
            write_summary_csv(&stats, &mut summary)?;
            write_file(&dir.join("net_summary.csv"), &summary)?;
            let reports: Vec<_> = stats.iter().map(|st| check_requirements(st, &profile)).collect();
            write_file(
                &dir.join("requirements.json"),
                (serde_json::to_string_pretty(&reports)? + "\n").as_bytes(),
            )?;
            print!("{}", String::from_utf8_lossy(&summary));
        }
        Cmd::Sweep(a) => {
            let mut cfg = base_config(common)?;
            if let Some(p) = a.scenario {
                cfg.scenario = Some(p);
            }
            if let Some(v) = a.sets {
                cfg.sets = v;
                cfg.net_sets = cfg.net_sets.min(v);
            }
            if let Some(v) = a.per_set {
                cfg.per_set = v;
            }
            if let Some(v) = a.medical {
                cfg.medical = v;
            }
            if let Some(v) = a.drones {
                cfg.drones = v;
            }
            if a.no_prioritize {
                cfg.prioritize = vec![false];
            }
            if a.only_prioritized {
                cfg.prioritize = vec![true];
            }
            if let Some(v) = a.models {
                cfg.models = v.into_iter().filter(|m| m != "none").collect();
            }
            if let Some(v) = a.net_sets {
                cfg.net_sets = v;
            }
            if let Some(v) = a.solver {
                cfg.solver = v;
            }
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run_experiment(&cfg)?;
            outcome.write(&dir)?;
            info!("wrote {}", dir.display());
            println!(
                "{}: {} runs, {} failed",
                dir.display(),
                outcome.manifest.runs.len(),
                outcome.failures()
            );
            if outcome.failures() > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Report(a) => {
            let text = report(&a.dir)?;
            print!("{text}");
            if let Some(out) = &common.out {
                write_file(out, text.as_bytes())?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Deserialize)]
struct SummaryLine {
    drones: usize,
    prioritized: bool,
    category: Group,
    mean_s: f64,
    median_s: f64,
    capacity_20min: f64,
}

fn read_summary(path: &Path) -> anyhow::Result<Vec<SummaryLine>> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = rd.deserialize().collect::<Result<Vec<SummaryLine>, _>>()?;
    if rows.is_empty() {
        bail!("{} has no rows", path.display());
    }
    Ok(rows)
}

/// Plain-text overview of a sweep directory.
fn report(dir: &Path) -> anyhow::Result<String> {
    use std::fmt::Write;

    let rows = read_summary(&dir.join("summary.csv"))?;
    let mut out = String::new();
    writeln!(out, "waiting time by fleet (minutes)")?;
    writeln!(
        out,
        "{:>6} {:>11} {:>9} {:>9} {:>9} {:>9} {:>8}",
        "drones", "prioritized", "medical", "standard", "all", "median", "<=20min"
    )?;
    let find = |d: usize, p: bool, g: Group| rows.iter().find(|r| r.drones == d && r.prioritized == p && r.category == g);
    let mut configs: Vec<(usize, bool)> = rows.iter().map(|r| (r.drones, r.prioritized)).collect();
    configs.dedup();
    let minutes = |v: Option<&SummaryLine>, f: fn(&SummaryLine) -> f64| {
        v.map_or_else(|| "-".to_string(), |r| format!("{:.1}", f(r) / 60.0))
    };
    for &(d, p) in &configs {
        let all = find(d, p, Group::All);
        writeln!(
            out,
            "{:>6} {:>11} {:>9} {:>9} {:>9} {:>9} {:>8}",
            d,
            p,
            minutes(find(d, p, Group::Medical), |r| r.mean_s),
            minutes(find(d, p, Group::Standard), |r| r.mean_s),
            minutes(all, |r| r.mean_s),
            minutes(all, |r| r.median_s),
            all.map_or_else(|| "-".to_string(), |r| format!("{:.1}%", r.capacity_20min * 100.0)),
        )?;
    }

    let mut drones: Vec<usize> = configs.iter().map(|c| c.0).collect();
    drones.dedup();
    let mut effects = Vec::new();
    for &d in &drones {
        let mean = |p: bool, g: Group| find(d, p, g).map(|r| r.mean_s);
        if let (Some(bm), Some(bs), Some(pm), Some(ps)) = (
            mean(false, Group::Medical),
            mean(false, Group::Standard),
            mean(true, Group::Medical),
            mean(true, Group::Standard),
        ) {
            let stats = |m: f64, s: f64| {
                let set = effect_set();
                let times = [(0, m), (1, s)].into_iter().map(|(i, t)| (sidekick_core::JobId(i), t)).collect();
                waiting_stats_from(&times, &set)
            };
            let (dm, ds) = prioritization_effect(&stats(bm, bs)?, &stats(pm, ps)?)?;
            effects.push((d, dm, ds));
        }
    }
    if !effects.is_empty() {
        writeln!(out, "\nprioritization effect on category means")?;
        for (d, dm, ds) in effects {
            writeln!(out, "  {d} drones: medical {:+.1}%, standard {:+.1}%", dm * 100.0, ds * 100.0)?;
        }
    }

    let net = dir.join("net_summary.csv");
    if net.exists() {
        let text = std::fs::read_to_string(&net).with_context(|| format!("reading {}", net.display()))?;
        writeln!(out, "\nnetwork ({})", net.display())?;
        for line in text.lines() {
            writeln!(out, "  {line}")?;
        }
    }
    Ok(out)
}

/// Two-job set used to feed category means back through the metrics code.
fn effect_set() -> sidekick_core::DeliverySet {
    use sidekick_core::{BuildingId, Category, DeliveryJob, JobId, Point};
    let job = |i: u32, category| DeliveryJob {
        id: JobId(i),
        building: BuildingId(i),
        target: Point::ground(0.0, 0.0),
        category,
    };
    sidekick_core::DeliverySet {
        id: 0,
        jobs: vec![job(0, Category::Medical), job(1, Category::Standard)],
        with_replacement: false,
    }
}
