//! Discrete-event execution of a [`HybridPlan`].
//!
//! The simulator re-derives every time from the road graph and the fleet
//! parameters instead of copying the planner's numbers, so agreement
//! between the two is a meaningful check. Vehicle trajectories are exact
//! piecewise-linear functions of time.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hybrid::{FleetConfig, HybridPlan, Sortie};
use crate::jobs::JobId;
use crate::routing::Router;
use crate::scenario::{NodeId, Point, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VehicleId {
    Truck,
    Drone(u32),
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VehicleId::Truck => f.write_str("truck"),
            VehicleId::Drone(d) => write!(f, "drone{d}"),
        }
    }
}

impl FromStr for VehicleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "truck" {
            return Ok(VehicleId::Truck);
        }
        s.strip_prefix("drone")
            .and_then(|d| d.parse().ok())
            .map(VehicleId::Drone)
            .ok_or_else(|| Error::Parameter(format!("unknown vehicle `{s}`")))
    }
}

impl Serialize for VehicleId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VehicleId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    TruckArrive { node: NodeId },
    TruckServe { job: JobId, node: NodeId },
    DroneLaunch { drone: u32, job: JobId, node: NodeId },
    DroneDeliver { drone: u32, job: JobId },
    DroneRendezvous { drone: u32, node: NodeId },
    TourComplete,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::TruckArrive { .. } => "truck_arrive",
            EventKind::TruckServe { .. } => "truck_serve",
            EventKind::DroneLaunch { .. } => "drone_launch",
            EventKind::DroneDeliver { .. } => "drone_deliver",
            EventKind::DroneRendezvous { .. } => "drone_rendezvous",
            EventKind::TourComplete => "tour_complete",
        }
    }

    pub fn vehicle(&self) -> VehicleId {
        match *self {
            EventKind::DroneLaunch { drone, .. }
            | EventKind::DroneDeliver { drone, .. }
            | EventKind::DroneRendezvous { drone, .. } => VehicleId::Drone(drone),
            _ => VehicleId::Truck,
        }
    }

    pub fn job(&self) -> Option<JobId> {
        match *self {
            EventKind::TruckServe { job, .. }
            | EventKind::DroneLaunch { job, .. }
            | EventKind::DroneDeliver { job, .. } => Some(job),
            _ => None,
        }
    }

    pub fn node(&self) -> Option<NodeId> {
        match *self {
            EventKind::TruckArrive { node }
            | EventKind::TruckServe { node, .. }
            | EventKind::DroneLaunch { node, .. }
            | EventKind::DroneRendezvous { node, .. } => Some(node),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    #[serde(rename = "time_s")]
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
    /// Where the acting vehicle is when the event fires.
    pub position: Point,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knot {
    pub t: f64,
    pub p: Point,
}

impl Serialize for Knot {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.t, self.p.x, self.p.y, self.p.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Knot {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [t, x, y, z] = <[f64; 4]>::deserialize(d)?;
        Ok(Knot {
            t,
            p: Point::new(x, y, z),
        })
    }
}

/// Piecewise-linear position over time; knots ascend in time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    pub knots: Vec<Knot>,
}

impl Trajectory {
    fn push(&mut self, t: f64, p: Point) {
        if let Some(last) = self.knots.last() {
            if last.t == t && last.p == p {
                return;
            }
        }
        self.knots.push(Knot { t, p });
    }

    pub fn start(&self) -> f64 {
        self.knots.first().map_or(0.0, |k| k.t)
    }

    pub fn end(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.t)
    }

    pub fn covers(&self, t: f64) -> bool {
        !self.knots.is_empty() && self.start() <= t && t <= self.end()
    }

    /// Linear interpolation, clamped to the first and last knot.
    pub fn at(&self, t: f64) -> Point {
        let k = &self.knots;
        let i = k.partition_point(|kn| kn.t <= t);
        if i == 0 {
            return k[0].p;
        }
        if i == k.len() {
            return k[i - 1].p;
        }
        let (a, b) = (k[i - 1], k[i]);
        let dt = b.t - a.t;
        if dt <= 0.0 {
            return b.p;
        }
        a.p.lerp(&b.p, (t - a.t) / dt)
    }

    /// Largest ground-plane speed over all segments.
    pub fn max_planar_speed(&self) -> f64 {
        self.knots
            .windows(2)
            .filter(|w| w[1].t > w[0].t)
            .map(|w| w[0].p.planar_distance(&w[1].p) / (w[1].t - w[0].t))
            .fold(0.0, f64::max)
    }

    /// Largest jump between consecutive knots sharing a timestamp.
    pub fn max_discontinuity(&self) -> f64 {
        self.knots
            .windows(2)
            .filter(|w| w[1].t == w[0].t)
            .map(|w| w[0].p.distance(&w[1].p))
            .fold(0.0, f64::max)
    }
}

/// Vehicle motion over a whole run. Drones ride the truck outside their
/// flights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectories {
    #[serde(rename = "end_time_s")]
    pub end_time: f64,
    pub drone_count: u32,
    pub truck: Trajectory,
    /// One trajectory per sortie, keyed by drone.
    pub flights: BTreeMap<u32, Vec<Trajectory>>,
}

impl Trajectories {
    pub fn flight_at(&self, drone: u32, t: f64) -> Option<&Trajectory> {
        self.flights.get(&drone)?.iter().find(|f| f.covers(t))
    }

    /// Whether the drone is off the truck at `t`, both ends of a flight included.
    pub fn airborne(&self, drone: u32, t: f64) -> bool {
        self.flight_at(drone, t).is_some()
    }

    pub fn position_at(&self, vehicle: VehicleId, t: f64) -> Result<Point> {
        if !(t >= 0.0 && t <= self.end_time + 1e-9) {
            return Err(Error::Parameter(format!(
                "time {t} outside the run [0, {}]",
                self.end_time
            )));
        }
        match vehicle {
            VehicleId::Truck => Ok(self.truck.at(t)),
            VehicleId::Drone(d) if d < self.drone_count => Ok(self
                .flight_at(d, t)
                .map_or_else(|| self.truck.at(t), |f| f.at(t))),
            VehicleId::Drone(d) => Err(Error::Parameter(format!("no drone {d} in this run"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeliveryTrace {
    pub events: Vec<SimEvent>,
    pub completion: BTreeMap<JobId, f64>,
    pub trajectories: Trajectories,
}

impl DeliveryTrace {
    pub fn end_time(&self) -> f64 {
        self.trajectories.end_time
    }

    pub fn position_at(&self, vehicle: VehicleId, t: f64) -> Result<Point> {
        self.trajectories.position_at(vehicle, t)
    }

    /// Event log as CSV: `time_s,kind,vehicle,job,node,x,y,z`.
    pub fn write_events_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "time_s,kind,vehicle,job,node,x,y,z")?;
        for e in &self.events {
            let job = e.kind.job().map(|j| j.to_string()).unwrap_or_default();
            let node = e.kind.node().map(|n| n.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{:.6},{},{},{},{},{:.3},{:.3},{:.3}",
                e.time,
                e.kind.name(),
                e.kind.vehicle(),
                job,
                node,
                e.position.x,
                e.position.y,
                e.position.z
            )?;
        }
        Ok(())
    }

    /// Writes `<stem>.csv` (events) and `<stem>.json` (full trace).
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        let csv = dir.join(format!("{stem}.csv"));
        let mut buf = Vec::new();
        self.write_events_csv(&mut buf).map_err(|e| Error::io(&csv, e))?;
        std::fs::write(&csv, buf).map_err(|e| Error::io(&csv, e))?;
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, serde_json::to_string(self)? + "\n").map_err(|e| Error::io(&json, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }
}

#[derive(Clone, Copy, Debug)]
enum Action {
    TruckArrive(usize),
    TruckServed { visit: usize, k: usize },
    TruckLeave(usize),
    DroneLaunch(u32),
    DroneAtTarget(u32),
    DroneDelivered(u32),
    DroneAtNode(u32),
}

impl Action {
    // arrivals before handovers before launches before departures at equal times
    fn class(&self) -> u8 {
        match self {
            Action::TruckArrive(_) | Action::DroneAtNode(_) => 0,
            Action::DroneAtTarget(_) | Action::DroneDelivered(_) | Action::TruckServed { .. } => 1,
            Action::DroneLaunch(_) => 2,
            Action::TruckLeave(_) => 3,
        }
    }
}

struct Queued {
    time: f64,
    class: u8,
    seq: u64,
    action: Action,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other
            .time
            .total_cmp(&self.time)
            .then(other.class.cmp(&self.class))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum DroneState {
    Aboard { ready_at: f64 },
    Flying,
    Hovering,
}

struct Drone<'p> {
    sorties: Vec<&'p Sortie>,
    next: usize,
    state: DroneState,
    // times of the current flight
    launch: f64,
    at_target: f64,
    delivered: f64,
    at_node: f64,
    flights: Vec<Trajectory>,
}

impl Drone<'_> {
    fn current(&self) -> Option<&Sortie> {
        self.sorties.get(self.next).copied()
    }
}

struct Engine<'a> {
    scenario: &'a Scenario,
    fleet: &'a FleetConfig,
    plan: &'a HybridPlan,
    router: Router<'a>,
    queue: BinaryHeap<Queued>,
    seq: u64,
    now: f64,
    events: Vec<SimEvent>,
    completion: BTreeMap<JobId, f64>,
    arrived: Vec<Option<f64>>,
    truck_at: Option<usize>,
    truck: Trajectory,
    drones: Vec<Drone<'a>>,
}

impl<'a> Engine<'a> {
    fn schedule(&mut self, time: f64, action: Action) {
        self.seq += 1;
        self.queue.push(Queued {
            time,
            class: action.class(),
            seq: self.seq,
            action,
        });
    }

    fn emit(&mut self, kind: EventKind, position: Point) {
        self.events.push(SimEvent {
            time: self.now,
            kind,
            position,
        });
    }

    fn node_pos(&self, visit: usize) -> Point {
        self.scenario.graph.position(self.plan.truck.timetable[visit].node)
    }

    fn altitude(&self) -> f64 {
        self.fleet.drone_altitude
    }

    fn run(mut self) -> Result<DeliveryTrace> {
        self.schedule(0.0, Action::TruckArrive(0));
        while let Some(q) = self.queue.pop() {
            self.now = q.time;
            self.handle(q.action)?;
        }
        for (d, drone) in self.drones.iter().enumerate() {
            if drone.next < drone.sorties.len() {
                return Err(Error::Validation(format!(
                    "drone {d} never flew its sortie for job {}",
                    drone.sorties[drone.next].job
                )));
            }
        }
        if self.arrived.iter().any(Option::is_none) {
            return Err(Error::Validation("truck did not finish its path".into()));
        }
        let end = self.now;
        self.emit(EventKind::TourComplete, self.scenario.depot_position());
        let flights = self
            .drones
            .into_iter()
            .enumerate()
            .filter(|(_, d)| !d.flights.is_empty())
            .map(|(i, d)| (i as u32, d.flights))
            .collect();
        Ok(DeliveryTrace {
            events: self.events,
            completion: self.completion,
            trajectories: Trajectories {
                end_time: end,
                drone_count: self.fleet.drone_count as u32,
                truck: self.truck,
                flights,
            },
        })
    }

    fn handle(&mut self, action: Action) -> Result<()> {
        let tt = &self.plan.truck.timetable;
        match action {
            Action::TruckArrive(i) => {
                let visit = &tt[i];
                let pos = self.node_pos(i);
                self.arrived[i] = Some(self.now);
                self.truck_at = Some(i);
                self.truck.push(self.now, pos);
                if i > 0 {
                    self.emit(EventKind::TruckArrive { node: visit.node }, pos);
                }
                let mut t = self.now;
                for k in 0..visit.serves.len() {
                    t += self.fleet.truck_service;
                    self.schedule(t, Action::TruckServed { visit: i, k });
                }
                if i + 1 < tt.len() {
                    self.schedule(t, Action::TruckLeave(i));
                }
                for d in 0..self.drones.len() {
                    let drone = &self.drones[d];
                    match (drone.state, drone.current()) {
                        (DroneState::Hovering, Some(s)) if s.rendezvous_index == i => self.rendezvous(d as u32)?,
                        (DroneState::Aboard { ready_at }, Some(s)) if s.launch_index == i => {
                            self.schedule(ready_at.max(self.now), Action::DroneLaunch(d as u32));
                        }
                        _ => {}
                    }
                }
            }
            Action::TruckServed { visit, k } => {
                let job = tt[visit].serves[k];
                self.completion.insert(job, self.now);
                let pos = self.node_pos(visit);
                self.emit(EventKind::TruckServe { job, node: tt[visit].node }, pos);
            }
            Action::TruckLeave(i) => {
                let pos = self.node_pos(i);
                self.truck.push(self.now, pos);
                self.truck_at = None;
                for (d, drone) in self.drones.iter().enumerate() {
                    if let (DroneState::Aboard { .. }, Some(s)) = (drone.state, drone.current()) {
                        if s.launch_index == i {
                            return Err(Error::Validation(format!(
                                "drone {d} missed its launch for job {} at visit {i}",
                                s.job
                            )));
                        }
                    }
                }
                let next = i + 1;
                let edge = self
                    .scenario
                    .graph
                    .edge_between(tt[i].node, tt[next].node, |e| self.router.edge_time(e))
                    .expect("validated adjacency");
                let dt = self.router.edge_time(edge);
                self.schedule(self.now + dt, Action::TruckArrive(next));
            }
            Action::DroneLaunch(d) => {
                let drone = &self.drones[d as usize];
                let s = drone.current().expect("launch scheduled for a pending sortie");
                if self.truck_at != Some(s.launch_index) {
                    return Err(Error::Validation(format!(
                        "drone {d} is not on the truck at visit {} for job {}",
                        s.launch_index, s.job
                    )));
                }
                let (job, target, launch_index) = (s.job, s.target, s.launch_index);
                let from = self.node_pos(launch_index);
                let at_target = self.now + from.planar_distance(&target) / self.fleet.drone_speed;
                let drone = &mut self.drones[d as usize];
                drone.state = DroneState::Flying;
                drone.launch = self.now;
                drone.at_target = at_target;
                self.emit(
                    EventKind::DroneLaunch {
                        drone: d,
                        job,
                        node: tt[launch_index].node,
                    },
                    from,
                );
                self.schedule(at_target, Action::DroneAtTarget(d));
            }
            Action::DroneAtTarget(d) => {
                let t = self.now + self.fleet.drone_service;
                self.schedule(t, Action::DroneDelivered(d));
            }
            Action::DroneDelivered(d) => {
                let s = self.drones[d as usize].current().expect("in flight");
                let (job, target, r) = (s.job, s.target, s.rendezvous_index);
                let to = self.node_pos(r);
                self.completion.insert(job, self.now);
                self.emit(EventKind::DroneDeliver { drone: d, job }, target.with_z(self.altitude()));
                let at_node = self.now + target.planar_distance(&to) / self.fleet.drone_speed;
                self.drones[d as usize].delivered = self.now;
                self.schedule(at_node, Action::DroneAtNode(d));
            }
            Action::DroneAtNode(d) => {
                let r = self.drones[d as usize].current().expect("in flight").rendezvous_index;
                self.drones[d as usize].at_node = self.now;
                if self.truck_at == Some(r) {
                    self.rendezvous(d)?;
                } else if self.arrived[r].is_none() {
                    self.drones[d as usize].state = DroneState::Hovering;
                } else {
                    return Err(Error::Validation(format!(
                        "drone {d} reached visit {r} after the truck left"
                    )));
                }
            }
        }
        Ok(())
    }

    fn rendezvous(&mut self, d: u32) -> Result<()> {
        let alt = self.altitude();
        let s = self.drones[d as usize].current().expect("in flight");
        let (target, li, ri) = (s.target, s.launch_index, s.rendezvous_index);
        let launch_pos = self.node_pos(li);
        let node_pos = self.node_pos(ri);
        let node = self.plan.truck.timetable[ri].node;
        let now = self.now;
        let turnaround = self.fleet.turnaround;
        let drone = &mut self.drones[d as usize];

        let mut planar = vec![(drone.launch, launch_pos), (drone.at_target, target), (drone.delivered, target)];
        if now > drone.at_node {
            planar.push((drone.at_node, node_pos));
        }
        planar.push((now, node_pos));
        let flight = flight_path(
            &planar,
            &altitude_profile(drone.launch, drone.at_target, drone.delivered, now, alt),
        );
        drone.flights.push(flight);
        drone.state = DroneState::Aboard {
            ready_at: now + turnaround,
        };
        drone.next += 1;
        let ready_at = now + turnaround;
        let next_launch = drone.current().map(|s| s.launch_index);
        self.emit(EventKind::DroneRendezvous { drone: d, node }, node_pos);
        if next_launch.is_some() && next_launch == self.truck_at {
            self.schedule(ready_at, Action::DroneLaunch(d));
        }
        Ok(())
    }
}

/// Climb and descent rate used to shape flight altitude, m/s. Vertical moves
/// cost no time in the plan: they overlap horizontal flight at launch and
/// recovery and happen inside the service window at the customer.
pub const VERTICAL_SPEED: f64 = 5.0;

/// Altitude knots of one sortie: off the truck deck, cruise, down to the
/// customer and back up during service, down onto the truck.
fn altitude_profile(launch: f64, at_target: f64, delivered: f64, land: f64, alt: f64) -> Vec<(f64, f64)> {
    let ramp = alt / VERTICAL_SPEED;
    let up = ramp.min(at_target - launch);
    let down = ramp.min(land - delivered);
    let at_door = ramp.min((delivered - at_target) / 2.0);
    let mut z = vec![(launch, 0.0), (launch + up, alt), (at_target, alt)];
    if at_door > 0.0 {
        z.extend([(at_target + at_door, 0.0), (delivered - at_door, 0.0)]);
    }
    z.extend([(delivered, alt), (land - down, alt), (land, 0.0)]);
    z
}

/// Merges a planar path and an altitude profile sharing a time span.
fn flight_path(planar: &[(f64, Point)], profile: &[(f64, f64)]) -> Trajectory {
    let flat = Trajectory {
        knots: planar.iter().map(|&(t, p)| Knot { t, p: p.with_z(0.0) }).collect(),
    };
    let height = Trajectory {
        knots: profile
            .iter()
            .map(|&(t, z)| Knot {
                t,
                p: Point::new(0.0, 0.0, z),
            })
            .collect(),
    };
    let mut times: Vec<f64> = planar.iter().map(|k| k.0).chain(profile.iter().map(|k| k.0)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut out = Trajectory::default();
    for t in times {
        // planar knots carry exact endpoint positions; interpolate only between them
        let p = planar.iter().find(|k| k.0 == t).map_or_else(|| flat.at(t), |k| k.1);
        out.push(t, p.with_z(height.at(t).z));
    }
    out
}

fn validate(scenario: &Scenario, plan: &HybridPlan, fleet: &FleetConfig) -> Result<()> {
    fleet.validate()?;
    let fail = |m: String| Err(Error::Validation(m));
    let tt = &plan.truck.timetable;
    if tt.is_empty() {
        return fail("empty truck timetable".into());
    }
    if tt[0].node != scenario.depot {
        return fail("truck does not start at the depot".into());
    }
    if plan.truck.node_path.len() != tt.len() || plan.truck.node_path.iter().zip(tt).any(|(n, v)| *n != v.node) {
        return fail("node_path disagrees with the timetable".into());
    }
    if let Some(v) = tt.iter().find(|v| !scenario.graph.contains(v.node)) {
        return fail(format!("node {} is not in the scenario", v.node));
    }
    for w in tt.windows(2) {
        if scenario.graph.edge_between(w[0].node, w[1].node, |e| e.length).is_none() {
            return fail(format!("nodes {} and {} are not adjacent", w[0].node, w[1].node));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for j in tt.iter().flat_map(|v| &v.serves).chain(plan.sorties.iter().map(|s| &s.job)) {
        if !seen.insert(*j) {
            return fail(format!("job {j} is served twice"));
        }
    }
    for s in &plan.sorties {
        if s.drone as usize >= fleet.drone_count {
            return fail(format!("sortie needs drone {} but the fleet has {}", s.drone, fleet.drone_count));
        }
        if s.rendezvous_index >= tt.len() || s.launch_index >= s.rendezvous_index {
            return fail(format!("sortie for job {} has bad timetable indices", s.job));
        }
        if tt[s.launch_index].node != s.launch_node || tt[s.rendezvous_index].node != s.rendezvous_node {
            return fail(format!("sortie for job {} names nodes off the truck path", s.job));
        }
        if !s.target.is_finite() {
            return fail(format!("sortie for job {} has no target", s.job));
        }
    }
    Ok(())
}

/// Executes the plan event by event.
pub fn simulate(scenario: &Scenario, plan: &HybridPlan, fleet: &FleetConfig) -> Result<DeliveryTrace> {
    validate(scenario, plan, fleet)?;
    let mut drones: Vec<Drone<'_>> = (0..fleet.drone_count)
        .map(|_| Drone {
            sorties: Vec::new(),
            next: 0,
            state: DroneState::Aboard { ready_at: 0.0 },
            launch: 0.0,
            at_target: 0.0,
            delivered: 0.0,
            at_node: 0.0,
            flights: Vec::new(),
        })
        .collect();
    for s in &plan.sorties {
        drones[s.drone as usize].sorties.push(s);
    }
    for d in &mut drones {
        d.sorties
            .sort_by(|a, b| a.launch_index.cmp(&b.launch_index).then(a.launch_time.total_cmp(&b.launch_time)));
    }
    let n = plan.truck.timetable.len();
    let engine = Engine {
        scenario,
        fleet,
        plan,
        router: Router::with_speed_cap(&scenario.graph, fleet.truck_speed),
        queue: BinaryHeap::new(),
        seq: 0,
        now: 0.0,
        events: Vec::new(),
        completion: BTreeMap::new(),
        arrived: vec![None; n],
        truck_at: None,
        truck: Trajectory::default(),
        drones,
    };
    engine.run()
}
