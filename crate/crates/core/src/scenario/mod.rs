//! The simulation world: a planar road graph, extruded building footprints,
//! the depot and the base-station site.
//!
//! Coordinates are local planar meters (x east, y north, z up). A
//! [`Scenario`] is immutable once constructed and validated, so it can be
//! shared read-only between parallel runs.

mod file;
pub(crate) mod geometry;

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub use file::ScenarioFile;

/// Default road speed limit, 30 km/h.
pub const DEFAULT_SPEED_LIMIT: f64 = 8.33;
pub const BASE_STATION_HEIGHT: f64 = 30.0;
pub const MIN_BUILDING_HEIGHT: f64 = 6.0;
pub const MAX_BUILDING_HEIGHT: f64 = 24.0;
/// Upper bound on the access-point to footprint-centroid distance.
pub const MAX_ACCESS_OFFSET: f64 = 50.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn ground(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn with_z(self, z: f64) -> Self {
        Self { z, ..self }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Distance in the ground plane, ignoring altitude.
    pub fn planar_distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point {
            x: self.x + (other.x - self.x) * t,
            y: self.y + (other.y - self.y) * t,
            z: self.z + (other.z - self.z) * t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BuildingId(pub u32);

impl fmt::Display for BuildingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Undirected road segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub length: f64,
    pub speed_limit: f64,
}

impl Edge {
    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Connected road network; node ids are dense indices `0..n`.
#[derive(Clone, Debug)]
pub struct RoadGraph {
    nodes: Vec<Point>,
    edges: Vec<Edge>,
    // neighbor lists sorted by (neighbor id, edge index)
    adjacency: Vec<Vec<(NodeId, usize)>>,
}

impl PartialEq for RoadGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl RoadGraph {
    /// Builds and validates a graph. Node `i` gets id `NodeId(i)`.
    pub fn new(nodes: Vec<Point>, edges: Vec<Edge>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Invariant("graph has no nodes".into()));
        }
        for (i, p) in nodes.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::Invariant(format!("node {i} has non-finite coordinates")));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            if e.a.index() >= nodes.len() || e.b.index() >= nodes.len() {
                return Err(Error::Invariant(format!(
                    "edge {}-{} references a missing node",
                    e.a, e.b
                )));
            }
            if e.a == e.b {
                return Err(Error::Invariant(format!("self-loop at node {}", e.a)));
            }
            if !(e.speed_limit.is_finite() && e.speed_limit > 0.0) {
                return Err(Error::Invariant(format!(
                    "edge {}-{} speed_limit must be positive",
                    e.a, e.b
                )));
            }
            let euclid = nodes[e.a.index()].planar_distance(&nodes[e.b.index()]);
            if !e.length.is_finite() || e.length < euclid - 1e-9 * euclid.max(1.0) {
                return Err(Error::Invariant(format!(
                    "edge {}-{} length {} is shorter than endpoint distance {euclid}",
                    e.a, e.b, e.length
                )));
            }
            adjacency[e.a.index()].push((e.b, k));
            adjacency[e.b.index()].push((e.a, k));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let graph = Self {
            nodes,
            edges,
            adjacency,
        };
        if !graph.is_connected() {
            return Err(Error::Invariant("graph not connected".into()));
        }
        Ok(graph)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    count += 1;
                    queue.push_back(v.index());
                }
            }
        }
        count == self.nodes.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n.index() < self.nodes.len()
    }

    pub fn position(&self, n: NodeId) -> Point {
        self.nodes[n.index()]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Neighbors of `n` with the connecting edge, ascending by neighbor id.
    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = (NodeId, &Edge)> + '_ {
        self.adjacency[n.index()]
            .iter()
            .map(move |&(v, k)| (v, &self.edges[k]))
    }

    /// Cheapest edge joining two adjacent nodes under `cost`.
    pub fn edge_between(&self, a: NodeId, b: NodeId, cost: impl Fn(&Edge) -> f64) -> Option<&Edge> {
        self.neighbors(a)
            .filter(|(v, _)| *v == b)
            .map(|(_, e)| e)
            .min_by(|x, y| cost(x).total_cmp(&cost(y)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Building {
    pub id: BuildingId,
    /// Counter-clockwise simple ring at ground level.
    pub footprint: Vec<[f64; 2]>,
    pub height: f64,
    /// Delivery handover location.
    pub access_point: Point,
}

impl Building {
    pub fn centroid(&self) -> Point {
        let c = geometry::centroid(&self.footprint);
        Point::ground(c[0], c[1])
    }

    pub fn contains_xy(&self, p: [f64; 2]) -> bool {
        geometry::point_in_polygon(p, &self.footprint)
    }

    fn validate(&self) -> Result<()> {
        let id = self.id;
        if self.footprint.len() < 3 {
            return Err(Error::Invariant(format!("building {id} footprint has fewer than 3 vertices")));
        }
        if self.footprint.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::Invariant(format!("building {id} has non-finite footprint")));
        }
        if !geometry::is_simple(&self.footprint) {
            return Err(Error::Invariant(format!("building {id} footprint is not simple")));
        }
        if geometry::signed_area(&self.footprint) <= 0.0 {
            return Err(Error::Invariant(format!(
                "building {id} footprint is not counter-clockwise"
            )));
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(Error::Invariant(format!("building {id} height must be positive")));
        }
        if !self.access_point.is_finite() {
            return Err(Error::Invariant(format!("building {id} access point is not finite")));
        }
        let offset = self.access_point.planar_distance(&self.centroid());
        if offset > MAX_ACCESS_OFFSET {
            return Err(Error::Invariant(format!(
                "building {id} access point is {offset:.1} m from the footprint centroid (max {MAX_ACCESS_OFFSET} m)"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    pub graph: RoadGraph,
    pub buildings: Vec<Building>,
    pub depot: NodeId,
    /// Antenna position; `z` is the antenna height.
    pub base_station: Point,
}

impl Scenario {
    /// Assembles a scenario and checks every world invariant.
    pub fn new(
        graph: RoadGraph,
        buildings: Vec<Building>,
        depot: NodeId,
        base_station: Point,
    ) -> Result<Self> {
        let scenario = Self {
            graph,
            buildings,
            depot,
            base_station,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.graph.contains(self.depot) {
            return Err(Error::Invariant(format!("depot node {} not in graph", self.depot)));
        }
        if !(self.base_station.is_finite() && self.base_station.z > 0.0) {
            return Err(Error::Invariant("base station antenna height must be positive".into()));
        }
        let mut ids: Vec<_> = self.buildings.iter().map(|b| b.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invariant("duplicate building id".into()));
        }
        let depot = self.graph.position(self.depot).xy();
        for b in &self.buildings {
            b.validate()?;
            if b.contains_xy(depot) {
                return Err(Error::Invariant(format!("building {} contains the depot", b.id)));
            }
        }
        Ok(())
    }

    pub fn depot_position(&self) -> Point {
        self.graph.position(self.depot)
    }

    pub fn building(&self, id: BuildingId) -> Option<&Building> {
        self.buildings.iter().find(|b| b.id == id)
    }

    /// Closest road node in the ground plane; ties go to the smallest id.
    pub fn nearest_node(&self, p: Point) -> NodeId {
        let mut best = (NodeId(0), f64::INFINITY);
        for (id, n) in self.graph.node_ids().zip(self.graph.nodes()) {
            let d = (n.x - p.x).powi(2) + (n.y - p.y).powi(2);
            if d < best.1 {
                best = (id, d);
            }
        }
        best.0
    }

    /// True iff the segment `a`–`b` passes through any extruded building.
    ///
    /// The endpoints are put in a canonical order first so the answer does
    /// not depend on the direction of the query.
    pub fn los_blocked(&self, a: Point, b: Point) -> bool {
        let key = |p: &Point| (p.x, p.y, p.z);
        let (a, b) = match key(&a).partial_cmp(&key(&b)) {
            Some(std::cmp::Ordering::Greater) => (b, a),
            _ => (a, b),
        };
        self.buildings
            .iter()
            .any(|bld| geometry::segment_hits_prism(a, b, &bld.footprint, bld.height))
    }
}

/// Parameters of the synthetic grid world.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    pub buildings_per_cell: usize,
    pub seed: u64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            rows: 8,
            cols: 8,
            spacing: 100.0,
            buildings_per_cell: 2,
            seed: 1,
        }
    }
}

/// Generates a `rows × cols` Manhattan grid with random rectangular
/// buildings inside the cells.
///
/// Node `r * cols + c` sits at `(c * spacing, r * spacing)`; the depot is
/// node 0 and the base station sits over the grid center. Each cell is split
/// into `buildings_per_cell` strips along x with one building per strip, so
/// footprints never overlap.
pub fn generate_grid_scenario(
    rows: usize,
    cols: usize,
    spacing: f64,
    buildings_per_cell: usize,
    seed: u64,
) -> Result<Scenario> {
    if rows < 2 || cols < 2 {
        return Err(Error::Parameter(format!(
            "grid needs at least 2x2 nodes, got {rows}x{cols}"
        )));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::Parameter(format!("spacing must be positive, got {spacing}")));
    }
    if rows.saturating_mul(cols) > u32::MAX as usize {
        return Err(Error::Parameter("grid too large".into()));
    }

    let id = |r: usize, c: usize| NodeId((r * cols + c) as u32);
    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(Point::ground(c as f64 * spacing, r as f64 * spacing));
        }
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let road = |b| Edge {
                a: id(r, c),
                b,
                length: spacing,
                speed_limit: DEFAULT_SPEED_LIMIT,
            };
            if c + 1 < cols {
                edges.push(road(id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push(road(id(r + 1, c)));
            }
        }
    }
    let graph = RoadGraph::new(nodes, edges)?;

    let mut rng = rng_from_seed(seed);
    let mut buildings = Vec::new();
    let margin = 0.1 * spacing;
    let inner = spacing - 2.0 * margin;
    // access point sits mid-side, so half the depth bounds its centroid offset
    let max_depth = (0.9 * inner).min(2.0 * MAX_ACCESS_OFFSET * 0.6);
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let (x0, y0) = (c as f64 * spacing + margin, r as f64 * spacing + margin);
            let strip = inner / buildings_per_cell.max(1) as f64;
            for k in 0..buildings_per_cell {
                let sx = x0 + k as f64 * strip;
                let width = rng.random_range(0.4..0.9) * strip;
                let depth = rng.random_range(0.4 * max_depth..max_depth);
                let bx = sx + rng.random_range(0.0..(strip - width));
                let by = y0 + rng.random_range(0.0..(inner - depth));
                let height = rng.random_range(MIN_BUILDING_HEIGHT..MAX_BUILDING_HEIGHT);
                let footprint = vec![
                    [bx, by],
                    [bx + width, by],
                    [bx + width, by + depth],
                    [bx, by + depth],
                ];
                // hand over on the side facing the closer horizontal road
                let south_gap = by - r as f64 * spacing;
                let north_gap = (r + 1) as f64 * spacing - (by + depth);
                let ay = if south_gap <= north_gap { by } else { by + depth };
                buildings.push(Building {
                    id: BuildingId(buildings.len() as u32),
                    footprint,
                    height,
                    access_point: Point::ground(bx + width / 2.0, ay),
                });
            }
        }
    }
    let center = Point::new(
        (cols - 1) as f64 * spacing / 2.0,
        (rows - 1) as f64 * spacing / 2.0,
        BASE_STATION_HEIGHT,
    );
    Scenario::new(graph, buildings, id(0, 0), center)
}

pub fn generate_from_params(p: &GridParams) -> Result<Scenario> {
    generate_grid_scenario(p.rows, p.cols, p.spacing, p.buildings_per_cell, p.seed)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    Scenario::try_from(file)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&ScenarioFile::from(scenario.clone()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
