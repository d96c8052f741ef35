//! En-route drone sortie planning.
//!
//! The truck drives a fixed tour and never stops for drone operations. A
//! drone riding on the truck lifts off as the truck passes a node of its
//! path, flies straight to a single customer, and rejoins the truck at a
//! later node of the same path, hovering if it gets there first.
//!
//! Plans are built greedily. Starting from the truck-only tour, every
//! candidate that moves one truck job onto a drone is evaluated by
//! rebuilding the truck timetable without that job and re-placing the
//! drone sorties; the candidate with the largest drop in total waiting time
//! is committed, until no candidate helps. Fleets with `k` drones continue
//! from the final plan for `k - 1` drones, which makes the objective
//! monotone in the drone count.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jobs::{Category, DeliveryJob, DeliverySet, JobId};
use crate::routing::{plain_tour, priority_schedule, Router, Solver};
use crate::scenario::{NodeId, Point, Scenario};

const TIME_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FleetConfig {
    /// m/s
    pub truck_speed: f64,
    /// Seconds per truck handover.
    pub truck_service: f64,
    pub drone_count: usize,
    /// m/s
    pub drone_speed: f64,
    /// Maximum airborne seconds per sortie.
    pub drone_endurance: f64,
    /// Seconds at the customer, vertical transit included.
    pub drone_service: f64,
    /// Seconds aboard the truck between sorties.
    pub turnaround: f64,
    /// Cruise altitude in meters.
    pub drone_altitude: f64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            truck_speed: 8.33,
            truck_service: 60.0,
            drone_count: 0,
            drone_speed: 12.0,
            drone_endurance: 1200.0,
            drone_service: 30.0,
            turnaround: 60.0,
            drone_altitude: 50.0,
        }
    }
}

impl FleetConfig {
    pub const MAX_DRONES: usize = 32;

    pub fn with_drones(self, drone_count: usize) -> Self {
        Self { drone_count, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("truck_speed", self.truck_speed),
            ("drone_speed", self.drone_speed),
            ("drone_endurance", self.drone_endurance),
            ("drone_altitude", self.drone_altitude),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("truck_service", self.truck_service),
            ("drone_service", self.drone_service),
            ("turnaround", self.turnaround),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.drone_count > Self::MAX_DRONES {
            return Err(Error::Parameter(format!(
                "drone_count {} exceeds {}",
                self.drone_count,
                Self::MAX_DRONES
            )));
        }
        Ok(())
    }
}

/// One entry of the truck timetable: a pass over (or a stop at) a node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub node: NodeId,
    #[serde(rename = "arrive_s")]
    pub arrive: f64,
    /// Equals `arrive` unless the truck hands over parcels here.
    #[serde(rename = "depart_s")]
    pub depart: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub serves: Vec<JobId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruckPlan {
    /// Truck-served jobs in visiting order.
    pub stops: Vec<JobId>,
    pub node_path: Vec<NodeId>,
    pub timetable: Vec<Visit>,
}

impl TruckPlan {
    /// Latest time the truck is at visit `i`. The truck parks at the end of
    /// its path, so the final visit never closes.
    pub fn window_end(&self, i: usize) -> f64 {
        if i + 1 == self.timetable.len() {
            f64::INFINITY
        } else {
            self.timetable[i].depart
        }
    }

    pub fn end_time(&self) -> f64 {
        self.timetable.last().map_or(0.0, |v| v.arrive)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sortie {
    pub drone: u32,
    pub job: JobId,
    pub target: Point,
    /// Index into the truck timetable.
    pub launch_index: usize,
    pub launch_node: NodeId,
    #[serde(rename = "launch_s")]
    pub launch_time: f64,
    pub rendezvous_index: usize,
    pub rendezvous_node: NodeId,
    #[serde(rename = "rendezvous_s")]
    pub rendezvous_time: f64,
    pub outbound_m: f64,
    pub return_m: f64,
    #[serde(rename = "hover_s")]
    pub hover_wait: f64,
    /// Handover completion.
    #[serde(rename = "delivered_s")]
    pub delivered_at: f64,
}

impl Sortie {
    pub fn airborne(&self) -> f64 {
        self.rendezvous_time - self.launch_time
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Infeasible {
    /// The truck has left every candidate node before the drone could get there.
    NoRendezvous,
    EnduranceExceeded,
    /// The drone is not aboard the truck during the launch visit.
    NotAboard,
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Infeasible::NoRendezvous => "no rendezvous node",
            Infeasible::EnduranceExceeded => "endurance exceeded",
            Infeasible::NotAboard => "drone not aboard at launch",
        })
    }
}

impl std::error::Error for Infeasible {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridPlan {
    #[serde(rename = "set")]
    pub set_id: u32,
    pub prioritized: bool,
    pub fleet: FleetConfig,
    pub truck: TruckPlan,
    pub sorties: Vec<Sortie>,
    /// Predicted handover completion per job, seconds from tour start.
    pub completion: BTreeMap<JobId, f64>,
}

impl HybridPlan {
    pub fn total_waiting(&self) -> f64 {
        self.completion.values().sum()
    }

    pub fn makespan(&self) -> f64 {
        self.sorties
            .iter()
            .map(|s| s.rendezvous_time)
            .fold(self.truck.end_time(), f64::max)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }

    /// Checks every plan invariant against the world and the delivery set.
    pub fn check_invariants(&self, scenario: &Scenario, set: &DeliverySet) -> Result<()> {
        let fleet = &self.fleet;
        let fail = |msg: String| Err(Error::Validation(msg));
        let tt = &self.truck.timetable;
        if tt.is_empty() || tt[0].node != scenario.depot || tt[0].arrive != 0.0 {
            return fail("truck must start at the depot at t = 0".into());
        }
        if tt.last().map(|v| v.node) != Some(scenario.depot) {
            return fail("truck must end at the depot".into());
        }
        if self.truck.node_path != tt.iter().map(|v| v.node).collect::<Vec<_>>() {
            return fail("node_path disagrees with timetable".into());
        }
        let router = Router::with_speed_cap(&scenario.graph, fleet.truck_speed);
        for (i, w) in tt.windows(2).enumerate() {
            let Some(edge) = scenario.graph.edge_between(w[0].node, w[1].node, |e| router.edge_time(e)) else {
                return fail(format!("timetable entries {i} and {} are not adjacent", i + 1));
            };
            if (w[1].arrive - w[0].depart - router.edge_time(edge)).abs() > TIME_EPS {
                return fail(format!("truck leg {i} does not match road travel time"));
            }
        }
        for (i, v) in tt.iter().enumerate() {
            let expected = v.arrive + v.serves.len() as f64 * fleet.truck_service;
            if (v.depart - expected).abs() > TIME_EPS {
                return fail(format!("visit {i} departs at {} instead of {expected}", v.depart));
            }
        }
        let served_by_truck: Vec<JobId> = tt.iter().flat_map(|v| v.serves.iter().copied()).collect();
        if served_by_truck != self.truck.stops {
            return fail("truck stops disagree with timetable handovers".into());
        }

        let mut served: BTreeMap<JobId, usize> = BTreeMap::new();
        for &j in served_by_truck.iter().chain(self.sorties.iter().map(|s| &s.job)) {
            *served.entry(j).or_default() += 1;
        }
        for job in &set.jobs {
            match served.remove(&job.id) {
                Some(1) => {}
                Some(k) => return fail(format!("job {} served {k} times", job.id)),
                None => return fail(format!("job {} never served", job.id)),
            }
        }
        if let Some((j, _)) = served.into_iter().next() {
            return fail(format!("plan serves unknown job {j}"));
        }

        let mut per_drone: BTreeMap<u32, Vec<&Sortie>> = BTreeMap::new();
        for s in &self.sorties {
            if s.drone as usize >= fleet.drone_count {
                return fail(format!("sortie uses drone {} of {}", s.drone, fleet.drone_count));
            }
            let (Some(lv), Some(rv)) = (tt.get(s.launch_index), tt.get(s.rendezvous_index)) else {
                return fail(format!("sortie for job {} indexes outside the timetable", s.job));
            };
            if lv.node != s.launch_node || rv.node != s.rendezvous_node {
                return fail(format!("sortie for job {} names nodes off the truck path", s.job));
            }
            if s.rendezvous_index <= s.launch_index {
                return fail(format!("sortie for job {} rejoins before it launches", s.job));
            }
            if s.launch_time < lv.arrive - TIME_EPS || s.launch_time > lv.depart + TIME_EPS {
                return fail(format!("sortie for job {} launches while the truck is elsewhere", s.job));
            }
            if s.rendezvous_time < rv.arrive - TIME_EPS
                || s.rendezvous_time > self.truck.window_end(s.rendezvous_index) + TIME_EPS
            {
                return fail(format!("sortie for job {} misses the truck at rendezvous", s.job));
            }
            let job = set.job(s.job).expect("checked above");
            if s.target != job.target {
                return fail(format!("sortie for job {} flies to the wrong target", s.job));
            }
            let lp = scenario.graph.position(s.launch_node);
            let rp = scenario.graph.position(s.rendezvous_node);
            if (lp.planar_distance(&s.target) - s.outbound_m).abs() > 1e-6
                || (s.target.planar_distance(&rp) - s.return_m).abs() > 1e-6
            {
                return fail(format!("sortie for job {} leg lengths are inconsistent", s.job));
            }
            let flight = (s.outbound_m + s.return_m) / fleet.drone_speed + fleet.drone_service;
            if s.hover_wait < -TIME_EPS || (s.airborne() - flight - s.hover_wait).abs() > TIME_EPS {
                return fail(format!("sortie for job {} airborne time is inconsistent", s.job));
            }
            if s.airborne() > fleet.drone_endurance + TIME_EPS {
                return fail(format!("sortie for job {} exceeds endurance", s.job));
            }
            per_drone.entry(s.drone).or_default().push(s);
        }
        for (d, mut sorties) in per_drone {
            sorties.sort_by(|a, b| a.launch_time.total_cmp(&b.launch_time));
            for w in sorties.windows(2) {
                if w[1].launch_time < w[0].rendezvous_time + fleet.turnaround - TIME_EPS {
                    return fail(format!("drone {d} relaunches before its turnaround ends"));
                }
                if w[1].launch_index < w[0].rendezvous_index {
                    return fail(format!("drone {d} launches from a node it already passed"));
                }
            }
        }

        let timeline = plan_timeline(self);
        if timeline.len() != self.completion.len() {
            return fail("completion map size mismatch".into());
        }
        for (j, t) in &timeline {
            if (self.completion[j] - t).abs() > TIME_EPS {
                return fail(format!("completion of job {j} disagrees with the timeline"));
            }
        }
        Ok(())
    }
}

/// Sufficient reachability test: a there-and-back flight from the node
/// nearest the target fits in one battery.
pub fn drone_eligible(job: &DeliveryJob, fleet: &FleetConfig, scenario: &Scenario) -> bool {
    let node = scenario.graph.position(scenario.nearest_node(job.target));
    2.0 * node.planar_distance(&job.target) / fleet.drone_speed + fleet.drone_service <= fleet.drone_endurance
}

/// Places one sortie that lifts off during timetable visit `launch_index`.
///
/// The drone departs at `max(arrive, drone_free_at)` and rejoins the truck
/// at the earliest later visit it can reach before the truck leaves.
pub fn compute_sortie(
    truck: &TruckPlan,
    launch_index: usize,
    job: &DeliveryJob,
    drone: u32,
    drone_free_at: f64,
    fleet: &FleetConfig,
    scenario: &Scenario,
) -> Result<Sortie, Infeasible> {
    let tt = &truck.timetable;
    let Some(visit) = tt.get(launch_index) else {
        return Err(Infeasible::NotAboard);
    };
    let launch_time = visit.arrive.max(drone_free_at);
    if launch_time > truck.window_end(launch_index) {
        return Err(Infeasible::NotAboard);
    }
    let launch_pos = scenario.graph.position(visit.node);
    let outbound_m = launch_pos.planar_distance(&job.target);
    let at_target = launch_time + outbound_m / fleet.drone_speed;
    let delivered_at = at_target + fleet.drone_service;
    if delivered_at - launch_time > fleet.drone_endurance {
        return Err(Infeasible::EnduranceExceeded);
    }
    for r in (launch_index + 1)..tt.len() {
        let rv = &tt[r];
        if rv.arrive - launch_time > fleet.drone_endurance {
            return Err(Infeasible::EnduranceExceeded);
        }
        let return_m = job.target.planar_distance(&scenario.graph.position(rv.node));
        let drone_arrival = delivered_at + return_m / fleet.drone_speed;
        if drone_arrival > truck.window_end(r) {
            continue;
        }
        let rendezvous_time = drone_arrival.max(rv.arrive);
        if rendezvous_time - launch_time > fleet.drone_endurance {
            return Err(Infeasible::EnduranceExceeded);
        }
        return Ok(Sortie {
            drone,
            job: job.id,
            target: job.target,
            launch_index,
            launch_node: visit.node,
            launch_time,
            rendezvous_index: r,
            rendezvous_node: rv.node,
            rendezvous_time,
            outbound_m,
            return_m,
            hover_wait: rendezvous_time - drone_arrival,
            delivered_at,
        });
    }
    Err(Infeasible::NoRendezvous)
}

/// Completion time of every job recomputed from the plan alone.
pub fn plan_timeline(plan: &HybridPlan) -> BTreeMap<JobId, f64> {
    let mut out = BTreeMap::new();
    for v in &plan.truck.timetable {
        let mut t = v.arrive;
        for &j in &v.serves {
            t += plan.fleet.truck_service;
            out.insert(j, t);
        }
    }
    for s in &plan.sorties {
        let at_target = s.launch_time + s.outbound_m / plan.fleet.drone_speed;
        out.insert(s.job, at_target + plan.fleet.drone_service);
    }
    out
}

/// Per-set planning context: job data plus cached road paths between the
/// nodes any truck tour can visit.
struct Planner<'a> {
    scenario: &'a Scenario,
    fleet: FleetConfig,
    set: &'a DeliverySet,
    router: Router<'a>,
    job_node: HashMap<JobId, NodeId>,
    // (node, edge time from the previous node) along each cached path, first node excluded
    legs: HashMap<(NodeId, NodeId), Vec<(NodeId, f64)>>,
}

#[derive(Clone, Debug)]
struct State {
    truck: Vec<JobId>,
    queues: Vec<Vec<JobId>>,
}

impl<'a> Planner<'a> {
    fn new(scenario: &'a Scenario, set: &'a DeliverySet, fleet: FleetConfig) -> Result<Self> {
        let router = Router::with_speed_cap(&scenario.graph, fleet.truck_speed);
        let job_node: HashMap<JobId, NodeId> = set
            .jobs
            .iter()
            .map(|j| (j.id, scenario.nearest_node(j.target)))
            .collect();
        let mut nodes: Vec<NodeId> = job_node.values().copied().collect();
        nodes.push(scenario.depot);
        nodes.sort_unstable();
        nodes.dedup();
        let mut legs = HashMap::new();
        for &a in &nodes {
            for &b in &nodes {
                let path = router.shortest_path(a, b)?;
                let steps = path
                    .nodes
                    .windows(2)
                    .map(|w| {
                        let e = scenario
                            .graph
                            .edge_between(w[0], w[1], |e| router.edge_time(e))
                            .expect("consecutive path nodes are adjacent");
                        (w[1], router.edge_time(e))
                    })
                    .collect();
                legs.insert((a, b), steps);
            }
        }
        Ok(Self {
            scenario,
            fleet,
            set,
            router,
            job_node,
            legs,
        })
    }

    fn job(&self, id: JobId) -> &'a DeliveryJob {
        self.set.job(id).expect("planner only handles jobs of its set")
    }

    /// Truck timetable for a stop sequence, closed at the depot.
    fn truck_plan(&self, stops: &[JobId]) -> TruckPlan {
        let depot = self.scenario.depot;
        let mut timetable = vec![Visit {
            node: depot,
            arrive: 0.0,
            depart: 0.0,
            serves: Vec::new(),
        }];
        let mut cur = depot;
        let drive = |timetable: &mut Vec<Visit>, from: NodeId, to: NodeId| {
            for &(node, dt) in &self.legs[&(from, to)] {
                let t = timetable.last().expect("non-empty").depart + dt;
                timetable.push(Visit {
                    node,
                    arrive: t,
                    depart: t,
                    serves: Vec::new(),
                });
            }
        };
        for &job in stops {
            let node = self.job_node[&job];
            drive(&mut timetable, cur, node);
            let last = timetable.last_mut().expect("non-empty");
            last.depart += self.fleet.truck_service;
            last.serves.push(job);
            cur = node;
        }
        drive(&mut timetable, cur, depot);
        TruckPlan {
            stops: stops.to_vec(),
            node_path: timetable.iter().map(|v| v.node).collect(),
            timetable,
        }
    }

    fn truck_waiting(&self, truck: &TruckPlan) -> f64 {
        let mut sum = 0.0;
        for v in &truck.timetable {
            let mut t = v.arrive;
            for _ in &v.serves {
                t += self.fleet.truck_service;
                sum += t;
            }
        }
        sum
    }

    /// Earliest-completion sortie for `job` given the drone's availability.
    fn best_sortie(&self, truck: &TruckPlan, job: JobId, drone: u32, free_at: f64, min_index: usize) -> Option<Sortie> {
        let job = self.job(job);
        let tt = &truck.timetable;
        let mut best: Option<Sortie> = None;
        for i in min_index..tt.len().saturating_sub(1) {
            let launch = tt[i].arrive.max(free_at);
            if let Some(b) = &best {
                if launch >= b.delivered_at {
                    break;
                }
            }
            if launch > truck.window_end(i) {
                continue;
            }
            let reach = launch
                + self.scenario.graph.position(tt[i].node).planar_distance(&job.target) / self.fleet.drone_speed
                + self.fleet.drone_service;
            if best.as_ref().is_some_and(|b| reach >= b.delivered_at) {
                continue;
            }
            if let Ok(s) = compute_sortie(truck, i, job, drone, free_at, &self.fleet, self.scenario) {
                best = Some(s);
            }
        }
        best
    }

    /// Places a drone's jobs in queue order, each at its earliest completion.
    fn realize_queue(&self, truck: &TruckPlan, drone: u32, queue: &[JobId]) -> Option<Vec<Sortie>> {
        let mut free_at = 0.0;
        let mut min_index = 0;
        let mut out = Vec::with_capacity(queue.len());
        for &job in queue {
            let s = self.best_sortie(truck, job, drone, free_at, min_index)?;
            free_at = s.rendezvous_time + self.fleet.turnaround;
            min_index = s.rendezvous_index;
            out.push(s);
        }
        Some(out)
    }

    fn queue_waiting(&self, truck: &TruckPlan, drone: u32, queue: &[JobId]) -> Option<f64> {
        self.realize_queue(truck, drone, queue)
            .map(|s| s.iter().map(|s| s.delivered_at).sum())
    }

    fn objective(&self, state: &State) -> Option<f64> {
        let truck = self.truck_plan(&state.truck);
        let mut total = self.truck_waiting(&truck);
        for (d, q) in state.queues.iter().enumerate() {
            total += self.queue_waiting(&truck, d as u32, q)?;
        }
        Some(total)
    }

    /// Greedy single-commit improvement until no move lowers the objective.
    fn improve(&self, state: &mut State) {
        let Some(mut current) = self.objective(state) else {
            return;
        };
        loop {
            let mut best: Option<(f64, usize, usize, usize)> = None;
            let mut candidates: Vec<(usize, JobId)> = state.truck.iter().copied().enumerate().collect();
            candidates.sort_by_key(|&(_, j)| j);
            for (pos_in_truck, job) in candidates {
                if !drone_eligible(self.job(job), &self.fleet, self.scenario) {
                    continue;
                }
                let mut stops = state.truck.clone();
                stops.remove(pos_in_truck);
                let truck = self.truck_plan(&stops);
                let truck_sum = self.truck_waiting(&truck);
                let bases: Option<Vec<f64>> = state
                    .queues
                    .iter()
                    .enumerate()
                    .map(|(d, q)| self.queue_waiting(&truck, d as u32, q))
                    .collect();
                let Some(bases) = bases else {
                    continue;
                };
                let base_total = truck_sum + bases.iter().sum::<f64>();
                let mut tried_idle = false;
                for (d, queue) in state.queues.iter().enumerate() {
                    // idle drones are interchangeable
                    if queue.is_empty() {
                        if tried_idle {
                            continue;
                        }
                        tried_idle = true;
                    }
                    for at in 0..=queue.len() {
                        let mut q = queue.clone();
                        q.insert(at, job);
                        let Some(sum) = self.queue_waiting(&truck, d as u32, &q) else {
                            continue;
                        };
                        let obj = base_total - bases[d] + sum;
                        let threshold = best.map_or(current, |b| b.0);
                        if obj < threshold - 1e-9 * threshold.abs().max(1.0) {
                            best = Some((obj, pos_in_truck, d, at));
                        }
                    }
                }
            }
            let Some((obj, pos_in_truck, d, at)) = best else {
                break;
            };
            let job = state.truck.remove(pos_in_truck);
            state.queues[d].insert(at, job);
            current = obj;
        }
    }

    fn finish(&self, state: &State, prioritized: bool, drone_count: usize) -> HybridPlan {
        let truck = self.truck_plan(&state.truck);
        let mut sorties: Vec<Sortie> = state
            .queues
            .iter()
            .enumerate()
            .flat_map(|(d, q)| {
                self.realize_queue(&truck, d as u32, q)
                    .expect("committed states are feasible")
            })
            .collect();
        sorties.sort_by(|a, b| a.launch_time.total_cmp(&b.launch_time).then(a.drone.cmp(&b.drone)));
        let mut plan = HybridPlan {
            set_id: self.set.id,
            prioritized,
            fleet: self.fleet.with_drones(drone_count),
            truck,
            sorties,
            completion: BTreeMap::new(),
        };
        plan.completion = plan_timeline(&plan);
        plan
    }
}

/// Plans for every drone count from 0 to `fleet.drone_count`; entry `k` is
/// the plan with `k` drones.
pub fn plan_hybrid_levels(
    scenario: &Scenario,
    set: &DeliverySet,
    fleet: &FleetConfig,
    prioritize: bool,
    solver: Solver,
) -> Result<Vec<HybridPlan>> {
    fleet.validate()?;
    set.validate(scenario)?;
    let planner = Planner::new(scenario, set, *fleet)?;
    let tour = if set.jobs.is_empty() {
        Vec::new()
    } else if prioritize {
        priority_schedule(&planner.router, scenario, set, solver)?.stops
    } else {
        plain_tour(&planner.router, scenario, set, solver)?.stops
    };
    let mut state = State {
        truck: tour,
        queues: Vec::new(),
    };
    let mut plans = vec![planner.finish(&state, prioritize, 0)];
    for k in 1..=fleet.drone_count {
        state.queues.push(Vec::new());
        planner.improve(&mut state);
        plans.push(planner.finish(&state, prioritize, k));
    }
    Ok(plans)
}

pub fn plan_hybrid(
    scenario: &Scenario,
    set: &DeliverySet,
    fleet: &FleetConfig,
    prioritize: bool,
    solver: Solver,
) -> Result<HybridPlan> {
    let mut levels = plan_hybrid_levels(scenario, set, fleet, prioritize, solver)?;
    Ok(levels.pop().expect("level 0 always present"))
}

/// Whether every medical truck stop precedes every standard truck stop.
pub fn medical_first(plan: &HybridPlan, set: &DeliverySet) -> bool {
    let cats: Vec<Category> = plan
        .truck
        .stops
        .iter()
        .filter_map(|&j| set.job(j).map(|j| j.category))
        .collect();
    cats.windows(2)
        .all(|w| !(w[0] == Category::Standard && w[1] == Category::Medical))
}
