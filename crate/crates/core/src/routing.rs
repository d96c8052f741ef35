//! Road-network shortest paths, travel-time matrices, TSP solvers and the
//! medical-first tour schedule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jobs::{Category, DeliverySet, JobId};
use crate::scenario::{Edge, NodeId, RoadGraph, Scenario};

/// Largest instance (including the start) accepted by [`tsp_exact`].
pub const MAX_EXACT: usize = 12;

fn tie_tolerance(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutedPath {
    pub nodes: Vec<NodeId>,
    /// Meters.
    pub total_length: f64,
    /// Seconds.
    pub travel_time: f64,
}

/// Shortest-path queries under an optional vehicle speed cap.
///
/// A vehicle traverses an edge at `min(speed_limit, speed_cap)`.
#[derive(Clone, Copy, Debug)]
pub struct Router<'a> {
    graph: &'a RoadGraph,
    speed_cap: f64,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: NodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Router<'a> {
    pub fn new(graph: &'a RoadGraph) -> Self {
        Self {
            graph,
            speed_cap: f64::INFINITY,
        }
    }

    pub fn with_speed_cap(graph: &'a RoadGraph, speed_cap: f64) -> Self {
        Self { graph, speed_cap }
    }

    pub fn graph(&self) -> &'a RoadGraph {
        self.graph
    }

    pub fn edge_time(&self, e: &Edge) -> f64 {
        e.length / e.speed_limit.min(self.speed_cap)
    }

    /// Single-source travel times to every node.
    pub fn times_from(&self, source: NodeId) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.graph.node_count()];
        let mut heap = BinaryHeap::new();
        dist[source.index()] = 0.0;
        heap.push(HeapEntry {
            cost: 0.0,
            node: source,
        });
        while let Some(HeapEntry { cost, node }) = heap.pop() {
            if cost > dist[node.index()] {
                continue;
            }
            for (v, e) in self.graph.neighbors(node) {
                let next = cost + self.edge_time(e);
                if next < dist[v.index()] {
                    dist[v.index()] = next;
                    heap.push(HeapEntry { cost: next, node: v });
                }
            }
        }
        dist
    }

    /// Minimum travel-time path; among equal-time paths the lexicographically
    /// smallest node sequence wins.
    pub fn shortest_path(&self, a: NodeId, b: NodeId) -> Result<RoutedPath> {
        for n in [a, b] {
            if !self.graph.contains(n) {
                return Err(Error::Routing(format!("node {n} not in graph")));
            }
        }
        // distances to b, then a greedy walk from a picking the smallest
        // neighbor that stays on some shortest path
        let to_b = self.times_from(b);
        if !to_b[a.index()].is_finite() {
            return Err(Error::Routing(format!("node {b} unreachable from {a}")));
        }
        let mut nodes = vec![a];
        let mut visited = vec![false; self.graph.node_count()];
        visited[a.index()] = true;
        let mut total_length = 0.0;
        let mut travel_time = 0.0;
        let mut u = a;
        while u != b {
            let remaining = to_b[u.index()];
            let step = self
                .graph
                .neighbors(u)
                .filter(|(v, _)| !visited[v.index()])
                .find(|(v, e)| {
                    (self.edge_time(e) + to_b[v.index()] - remaining).abs() <= tie_tolerance(remaining)
                });
            let Some((v, e)) = step else {
                return Err(Error::Routing(format!("lost shortest path at node {u}")));
            };
            // parallel edges: take the fastest one to v
            let e = self.graph.edge_between(u, v, |x| self.edge_time(x)).unwrap_or(e);
            total_length += e.length;
            travel_time += self.edge_time(e);
            visited[v.index()] = true;
            nodes.push(v);
            u = v;
        }
        Ok(RoutedPath {
            nodes,
            total_length,
            travel_time,
        })
    }

    /// Symmetric travel-time matrix between `stops` with a zero diagonal.
    pub fn matrix(&self, stops: &[NodeId]) -> Result<CostMatrix> {
        if let Some(n) = stops.iter().find(|n| !self.graph.contains(**n)) {
            return Err(Error::Routing(format!("node {n} not in graph")));
        }
        let n = stops.len();
        let mut m = CostMatrix::zeros(n);
        for i in 0..n {
            let dist = self.times_from(stops[i]);
            for j in (i + 1)..n {
                let t = dist[stops[j].index()];
                m.set(i, j, t);
                m.set(j, i, t);
            }
        }
        Ok(m)
    }
}

pub fn shortest_path(graph: &RoadGraph, a: NodeId, b: NodeId) -> Result<RoutedPath> {
    Router::new(graph).shortest_path(a, b)
}

pub fn travel_time_matrix(scenario: &Scenario, stops: &[NodeId]) -> Result<CostMatrix> {
    Router::new(&scenario.graph).matrix(stops)
}

/// Dense square cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parameter("cost matrix must be square".into()));
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    /// Euclidean distances between planar points.
    pub fn euclidean(points: &[[f64; 2]]) -> Self {
        let n = points.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]));
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).take(self.n).collect()
    }

    /// Cost of visiting `order` in sequence, plus the closing leg if `closed`.
    pub fn tour_cost(&self, order: &[usize], closed: bool) -> f64 {
        let mut c: f64 = order.windows(2).map(|w| self.get(w[0], w[1])).sum();
        if closed && order.len() > 1 {
            c += self.get(order[order.len() - 1], order[0]);
        }
        c
    }
}

fn check_start(matrix: &CostMatrix, start: usize) -> Result<()> {
    if matrix.is_empty() {
        return Err(Error::Parameter("empty cost matrix".into()));
    }
    if start >= matrix.len() {
        return Err(Error::Parameter(format!("start index {start} out of range")));
    }
    Ok(())
}

/// Globally optimal tour by Held–Karp dynamic programming.
///
/// The returned order begins with `start`. Among optimal tours the
/// lexicographically smallest order is returned.
pub fn tsp_exact(matrix: &CostMatrix, start: usize, closed: bool) -> Result<(Vec<usize>, f64)> {
    check_start(matrix, start)?;
    let n = matrix.len();
    if n > MAX_EXACT {
        return Err(Error::Size { n, max: MAX_EXACT });
    }
    let others: Vec<usize> = (0..n).filter(|&i| i != start).collect();
    let m = others.len();
    if m == 0 {
        return Ok((vec![start], 0.0));
    }
    let full = (1usize << m) - 1;
    // tail[mask][j]: cheapest way to finish from others[j] when `mask`
    // (excluding j) is still unvisited
    let mut tail = vec![f64::INFINITY; (full + 1) * m];
    for j in 0..m {
        tail[j] = if closed { matrix.get(others[j], start) } else { 0.0 };
    }
    for mask in 1..=full {
        for j in 0..m {
            if mask & (1 << j) != 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    let c = matrix.get(others[j], others[k]) + tail[(mask & !(1 << k)) * m + k];
                    if c < best {
                        best = c;
                    }
                }
            }
            tail[mask * m + j] = best;
        }
    }
    let cost_via = |from: usize, mask: usize, k: usize| matrix.get(from, others[k]) + tail[(mask & !(1 << k)) * m + k];
    let optimum = (0..m).map(|k| cost_via(start, full, k)).fold(f64::INFINITY, f64::min);

    let mut order = Vec::with_capacity(n);
    order.push(start);
    let (mut cur, mut mask, mut remaining) = (start, full, optimum);
    while mask != 0 {
        let k = (0..m)
            .filter(|&k| mask & (1 << k) != 0)
            .find(|&k| cost_via(cur, mask, k) <= remaining + tie_tolerance(remaining))
            .expect("some continuation attains the optimum");
        remaining -= matrix.get(cur, others[k]);
        mask &= !(1 << k);
        cur = others[k];
        order.push(cur);
    }
    let cost = matrix.tour_cost(&order, closed);
    Ok((order, cost))
}

/// Nearest-neighbor construction from `start`; ties go to the smallest index.
pub fn nearest_neighbor(matrix: &CostMatrix, start: usize) -> Vec<usize> {
    let n = matrix.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| matrix.get(cur, a).total_cmp(&matrix.get(cur, b)).then(a.cmp(&b)))
            .expect("unvisited node remains");
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

/// Change in cost from reversing `order[i + 1..=j]`.
fn two_opt_delta(matrix: &CostMatrix, order: &[usize], i: usize, j: usize, closed: bool) -> f64 {
    let n = order.len();
    let (a, b, c) = (order[i], order[i + 1], order[j]);
    let after = if j + 1 < n {
        Some(order[j + 1])
    } else if closed {
        Some(order[0])
    } else {
        None
    };
    let inner_fwd: f64 = order[i + 1..=j].windows(2).map(|w| matrix.get(w[0], w[1])).sum();
    let inner_rev: f64 = order[i + 1..=j].windows(2).map(|w| matrix.get(w[1], w[0])).sum();
    let mut delta = matrix.get(a, c) - matrix.get(a, b) + inner_rev - inner_fwd;
    if let Some(d) = after {
        delta += matrix.get(b, d) - matrix.get(c, d);
    }
    delta
}

/// Best-improvement 2-opt on an order whose first element stays fixed.
pub fn two_opt(matrix: &CostMatrix, order: &mut [usize], closed: bool) {
    let n = order.len();
    if n < 3 {
        return;
    }
    loop {
        let scale = matrix.tour_cost(order, closed);
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n - 1 {
            for j in (i + 2)..n {
                if closed && i == 0 && j == n - 1 {
                    continue;
                }
                let delta = two_opt_delta(matrix, order, i, j, closed);
                if delta < -tie_tolerance(scale) && best.is_none_or(|(d, _, _)| delta < d) {
                    best = Some((delta, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => order[i + 1..=j].reverse(),
            None => break,
        }
    }
}

/// Nearest-neighbor tour improved by 2-opt to a local optimum.
pub fn tsp_heuristic(matrix: &CostMatrix, start: usize, closed: bool) -> Result<(Vec<usize>, f64)> {
    check_start(matrix, start)?;
    let mut order = nearest_neighbor(matrix, start);
    two_opt(matrix, &mut order, closed);
    let cost = matrix.tour_cost(&order, closed);
    Ok((order, cost))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exact,
    #[default]
    Heuristic,
}

impl Solver {
    pub fn solve(self, matrix: &CostMatrix, start: usize, closed: bool) -> Result<(Vec<usize>, f64)> {
        match self {
            Solver::Exact => tsp_exact(matrix, start, closed),
            Solver::Heuristic => tsp_heuristic(matrix, start, closed),
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Solver::Exact),
            "heuristic" => Ok(Solver::Heuristic),
            other => Err(Error::Parameter(format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub start: NodeId,
    pub stops: Vec<JobId>,
    /// Whether the tour returns to `start`.
    pub closed: bool,
}

/// Road node serving each job of the set (the node nearest its target).
pub fn job_nodes(scenario: &Scenario, set: &DeliverySet) -> Vec<NodeId> {
    set.jobs.iter().map(|j| scenario.nearest_node(j.target)).collect()
}

/// Solves a TSP over a subset of the set's jobs starting at `start`.
fn sub_tour(
    router: &Router<'_>,
    start: NodeId,
    nodes: &[NodeId],
    jobs: &[JobId],
    solver: Solver,
    closed: bool,
) -> Result<Vec<JobId>> {
    let mut stops = Vec::with_capacity(nodes.len() + 1);
    stops.push(start);
    stops.extend_from_slice(nodes);
    let matrix = router.matrix(&stops)?;
    let (order, _) = solver.solve(&matrix, 0, closed)?;
    Ok(order[1..].iter().map(|&i| jobs[i - 1]).collect())
}

/// Closed TSP over every job of the set from the depot.
pub fn plain_tour(router: &Router<'_>, scenario: &Scenario, set: &DeliverySet, solver: Solver) -> Result<Tour> {
    let nodes = job_nodes(scenario, set);
    let jobs: Vec<JobId> = set.jobs.iter().map(|j| j.id).collect();
    Ok(Tour {
        start: scenario.depot,
        stops: sub_tour(router, scenario.depot, &nodes, &jobs, solver, true)?,
        closed: true,
    })
}

/// Medical-first schedule.
///
/// Medical jobs are routed as an open tour from the depot; the standard jobs
/// then form an open tour starting at the last medical stop. The truck
/// returns to the depot at the end. With only one category present this is
/// the plain closed tour.
pub fn priority_schedule(
    router: &Router<'_>,
    scenario: &Scenario,
    set: &DeliverySet,
    solver: Solver,
) -> Result<Tour> {
    if set.jobs.is_empty() {
        return Err(Error::Parameter("priority schedule needs a non-empty set".into()));
    }
    let nodes = job_nodes(scenario, set);
    let split = |cat: Category| -> (Vec<NodeId>, Vec<JobId>) {
        set.jobs
            .iter()
            .zip(&nodes)
            .filter(|(j, _)| j.category == cat)
            .map(|(j, n)| (*n, j.id))
            .unzip()
    };
    let (med_nodes, med_jobs) = split(Category::Medical);
    let (std_nodes, std_jobs) = split(Category::Standard);
    if med_jobs.is_empty() || std_jobs.is_empty() {
        return plain_tour(router, scenario, set, solver);
    }
    let mut stops = sub_tour(router, scenario.depot, &med_nodes, &med_jobs, solver, false)?;
    let last = *stops.last().expect("medical subset non-empty");
    let last_node = nodes[set.jobs.iter().position(|j| j.id == last).expect("job in set")];
    stops.extend(sub_tour(router, last_node, &std_nodes, &std_jobs, solver, false)?);
    Ok(Tour {
        start: scenario.depot,
        stops,
        closed: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jobs::{DeliveryJob, DeliverySet};
    use crate::scenario::{generate_grid_scenario, BuildingId, Point};
    use proptest::prelude::*;
    use rand::Rng;

    /// Independent oracle: enumerate every permutation of the non-start nodes.
    fn brute_force(matrix: &CostMatrix, start: usize, closed: bool) -> f64 {
        fn permute(rest: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
            if k == rest.len() {
                f(rest);
                return;
            }
            for i in k..rest.len() {
                rest.swap(k, i);
                permute(rest, k + 1, f);
                rest.swap(k, i);
            }
        }
        let mut rest: Vec<usize> = (0..matrix.len()).filter(|&i| i != start).collect();
        let mut best = f64::INFINITY;
        permute(&mut rest, 0, &mut |p| {
            let mut order = vec![start];
            order.extend_from_slice(p);
            best = best.min(matrix.tour_cost(&order, closed));
        });
        best
    }

    fn random_points(rng: &mut impl Rng, n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|_| [rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)])
            .collect()
    }

    #[test]
    fn grid_manhattan_path() {
        let s = generate_grid_scenario(3, 3, 100.0, 0, 1).unwrap();
        // (0,0) -> (200,100): node 0 -> node 5
        let p = shortest_path(&s.graph, NodeId(0), NodeId(5)).unwrap();
        assert!((p.total_length - 300.0).abs() < 1e-9);
        assert!((p.travel_time - 300.0 / 8.33).abs() < 1e-9);
        // lexicographically smallest among the three Manhattan paths
        assert_eq!(p.nodes, vec![NodeId(0), NodeId(1), NodeId(2), NodeId(5)]);
    }

    #[test]
    fn trivial_paths() {
        let s = generate_grid_scenario(2, 2, 100.0, 0, 1).unwrap();
        let p = shortest_path(&s.graph, NodeId(2), NodeId(2)).unwrap();
        assert_eq!(p.nodes, vec![NodeId(2)]);
        assert_eq!(p.total_length, 0.0);
        let p = shortest_path(&s.graph, NodeId(0), NodeId(1)).unwrap();
        assert_eq!(p.nodes, vec![NodeId(0), NodeId(1)]);
        assert!(shortest_path(&s.graph, NodeId(0), NodeId(9)).is_err());
    }

    #[test]
    fn speed_cap_slows_travel() {
        let s = generate_grid_scenario(2, 2, 100.0, 0, 1).unwrap();
        let p = Router::with_speed_cap(&s.graph, 5.0).shortest_path(NodeId(0), NodeId(1)).unwrap();
        assert!((p.travel_time - 20.0).abs() < 1e-12);
    }

    fn two_node_graph() -> Scenario {
        let nodes = vec![Point::ground(0.0, 0.0), Point::ground(100.0, 0.0)];
        let edges = vec![Edge {
            a: NodeId(0),
            b: NodeId(1),
            length: 100.0,
            speed_limit: 10.0,
        }];
        let graph = RoadGraph::new(nodes, edges).unwrap();
        Scenario::new(graph, vec![], NodeId(0), Point::new(0.0, 0.0, 30.0)).unwrap()
    }

    #[test]
    fn matrix_examples() {
        let s = two_node_graph();
        let m = travel_time_matrix(&s, &[NodeId(1)]).unwrap();
        assert_eq!(m.rows(), vec![vec![0.0]]);
        let m = travel_time_matrix(&s, &[NodeId(0), NodeId(1)]).unwrap();
        assert_eq!(m.rows(), vec![vec![0.0, 10.0], vec![10.0, 0.0]]);
    }

    #[test]
    fn matrix_matches_pairwise_paths_and_triangle_inequality() {
        let s = generate_grid_scenario(4, 5, 80.0, 0, 3).unwrap();
        let stops: Vec<NodeId> = [0, 7, 13, 19, 4, 10].map(NodeId).to_vec();
        let m = travel_time_matrix(&s, &stops).unwrap();
        for i in 0..stops.len() {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..stops.len() {
                assert_eq!(m.get(i, j), m.get(j, i));
                let p = shortest_path(&s.graph, stops[i], stops[j]).unwrap();
                assert!((p.travel_time - m.get(i, j)).abs() < 1e-9);
                for k in 0..stops.len() {
                    assert!(m.get(i, j) <= m.get(i, k) + m.get(k, j) + 1e-9);
                }
            }
        }
    }

    const SQUARE_WITH_DEPOT: [[f64; 2]; 5] =
        [[0.0, 0.0], [0.0, 0.0], [100.0, 0.0], [100.0, 100.0], [0.0, 100.0]];

    #[test]
    fn exact_square_perimeter() {
        let m = CostMatrix::euclidean(&SQUARE_WITH_DEPOT);
        let (order, cost) = tsp_exact(&m, 0, true).unwrap();
        assert!((cost - 400.0).abs() < 1e-9);
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn exact_small_cases() {
        let m = CostMatrix::euclidean(&[[3.0, 4.0]]);
        assert_eq!(tsp_exact(&m, 0, true).unwrap(), (vec![0], 0.0));
        let big = CostMatrix::zeros(13);
        assert!(matches!(tsp_exact(&big, 0, true), Err(Error::Size { n: 13, .. })));
        assert!(tsp_exact(&CostMatrix::zeros(0), 0, true).is_err());
    }

    #[test]
    fn exact_matches_enumeration_on_seven_stops() {
        let mut rng = crate::rng::rng_from_seed(77);
        for _ in 0..20 {
            let m = CostMatrix::euclidean(&random_points(&mut rng, 7));
            for closed in [true, false] {
                let (order, cost) = tsp_exact(&m, 0, closed).unwrap();
                assert!((cost - brute_force(&m, 0, closed)).abs() < 1e-9);
                assert_eq!(order.len(), 7);
                assert_eq!(order[0], 0);
            }
        }
    }

    #[test]
    fn heuristic_square_is_optimal() {
        let m = CostMatrix::euclidean(&SQUARE_WITH_DEPOT);
        let (_, cost) = tsp_heuristic(&m, 0, true).unwrap();
        assert!((cost - 400.0).abs() < 1e-9);
    }

    #[test]
    fn heuristic_keeps_optimal_order() {
        // points on a line visited left to right are already optimal
        let pts: Vec<[f64; 2]> = (0..6).map(|i| [i as f64 * 10.0, 0.0]).collect();
        let m = CostMatrix::euclidean(&pts);
        let (order, cost) = tsp_heuristic(&m, 0, false).unwrap();
        assert_eq!(order, vec![0, 1, 2, 3, 4, 5]);
        assert!((cost - 50.0).abs() < 1e-12);
    }

    #[test]
    fn heuristic_within_ten_percent_on_nine_stops() {
        let mut rng = crate::rng::rng_from_seed(2024);
        let (mut h, mut e) = (0.0, 0.0);
        for _ in 0..100 {
            let m = CostMatrix::euclidean(&random_points(&mut rng, 9));
            h += tsp_heuristic(&m, 0, true).unwrap().1;
            e += tsp_exact(&m, 0, true).unwrap().1;
        }
        assert!(h <= 1.10 * e, "heuristic mean {h} vs exact {e}");
    }

    fn set_from(scenario: &Scenario, cats: &[Category]) -> DeliverySet {
        DeliverySet {
            id: 0,
            jobs: cats
                .iter()
                .enumerate()
                .map(|(i, &category)| {
                    let b = &scenario.buildings[i];
                    DeliveryJob {
                        id: JobId(i as u32),
                        building: b.id,
                        target: b.access_point,
                        category,
                    }
                })
                .collect(),
            with_replacement: false,
        }
    }

    #[test]
    fn priority_forced_order() {
        let s = generate_grid_scenario(4, 4, 100.0, 2, 5).unwrap();
        let router = Router::new(&s.graph);
        // m1 is job 1 and n1 is job 0, so a plain tour could visit either first
        let set = set_from(&s, &[Category::Standard, Category::Medical]);
        let tour = priority_schedule(&router, &s, &set, Solver::Exact).unwrap();
        assert_eq!(tour.stops, vec![JobId(1), JobId(0)]);
        assert!(tour.closed);
    }

    #[test]
    fn priority_without_medical_is_plain() {
        let s = generate_grid_scenario(5, 5, 100.0, 2, 5).unwrap();
        let router = Router::new(&s.graph);
        let set = set_from(&s, &[Category::Standard; 8]);
        for solver in [Solver::Exact, Solver::Heuristic] {
            let a = priority_schedule(&router, &s, &set, solver).unwrap();
            let b = plain_tour(&router, &s, &set, solver).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn priority_medical_first_fifteen_jobs() {
        let s = generate_grid_scenario(8, 8, 100.0, 2, 1).unwrap();
        let router = Router::new(&s.graph);
        let sets = crate::jobs::generate_delivery_sets(&s, 10, 15, 5, 8).unwrap();
        for set in &sets {
            let tour = priority_schedule(&router, &s, set, Solver::Heuristic).unwrap();
            let cat = |id: JobId| set.job(id).unwrap().category;
            let last_med = tour.stops.iter().rposition(|&j| cat(j) == Category::Medical).unwrap();
            let first_std = tour.stops.iter().position(|&j| cat(j) == Category::Standard).unwrap();
            assert!(last_med < first_std);
            let mut seen = tour.stops.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..15).map(JobId).collect::<Vec<_>>());
        }
    }

    #[test]
    fn priority_rejects_empty_set() {
        let s = generate_grid_scenario(3, 3, 100.0, 1, 5).unwrap();
        let set = DeliverySet {
            id: 0,
            jobs: vec![],
            with_replacement: false,
        };
        assert!(priority_schedule(&Router::new(&s.graph), &s, &set, Solver::Heuristic).is_err());
        let _ = BuildingId(0);
    }

    proptest! {
        #[test]
        fn path_cost_is_self_consistent(rows in 2usize..6, cols in 2usize..6, seed: u64, a in 0u32..36, b in 0u32..36) {
            let s = generate_grid_scenario(rows, cols, 50.0, 0, seed).unwrap();
            let n = (rows * cols) as u32;
            let (a, b) = (NodeId(a % n), NodeId(b % n));
            let p = shortest_path(&s.graph, a, b).unwrap();
            prop_assert_eq!(p.nodes[0], a);
            prop_assert_eq!(*p.nodes.last().unwrap(), b);
            let mut len = 0.0;
            let mut time = 0.0;
            for w in p.nodes.windows(2) {
                let e = s.graph.edge_between(w[0], w[1], |e| e.length / e.speed_limit);
                prop_assert!(e.is_some());
                len += e.unwrap().length;
                time += e.unwrap().length / e.unwrap().speed_limit;
            }
            prop_assert!((len - p.total_length).abs() < 1e-9);
            prop_assert!((time - p.travel_time).abs() < 1e-9);
            let pa = s.graph.position(a);
            let pb = s.graph.position(b);
            let manhattan = (pa.x - pb.x).abs() + (pa.y - pb.y).abs();
            prop_assert!((p.total_length - manhattan).abs() < 1e-9);
        }

        #[test]
        fn solvers_are_valid_and_ordered(seed: u64, n in 1usize..9, closed: bool) {
            let mut rng = crate::rng::rng_from_seed(seed);
            let m = CostMatrix::euclidean(&random_points(&mut rng, n));
            let (eo, ec) = tsp_exact(&m, 0, closed).unwrap();
            let (ho, hc) = tsp_heuristic(&m, 0, closed).unwrap();
            for order in [&eo, &ho] {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
            }
            prop_assert!(ec <= hc + 1e-9);
            let nn = nearest_neighbor(&m, 0);
            prop_assert!(hc <= m.tour_cost(&nn, closed) + 1e-9);
            // 2-opt stability: no single reversal improves
            for i in 0..n.saturating_sub(1) {
                for j in (i + 2)..n {
                    if closed && i == 0 && j == n - 1 { continue; }
                    prop_assert!(two_opt_delta(&m, &ho, i, j, closed) >= -1e-6);
                }
            }
        }
    }
}
