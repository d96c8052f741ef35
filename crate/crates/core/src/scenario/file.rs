//! On-disk JSON schema for scenarios.

use serde::{Deserialize, Serialize};

use super::{Building, BuildingId, Edge, NodeId, Point, RoadGraph, Scenario};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub a: u32,
    pub b: u32,
    pub length_m: f64,
    pub speed_mps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingRecord {
    pub id: u32,
    pub footprint: Vec<[f64; 2]>,
    pub height_m: f64,
    pub access: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub buildings: Vec<BuildingRecord>,
    pub depot: u32,
    pub base_station: [f64; 3],
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(file: ScenarioFile) -> Result<Self> {
        let n = file.nodes.len();
        let mut nodes = vec![None; n];
        for rec in &file.nodes {
            let slot = nodes.get_mut(rec.id as usize).ok_or_else(|| {
                Error::Invariant(format!("node ids must be dense 0..{n}, found {}", rec.id))
            })?;
            if slot.is_some() {
                return Err(Error::Invariant(format!("duplicate node id {}", rec.id)));
            }
            *slot = Some(Point::ground(rec.x, rec.y));
        }
        let nodes = nodes.into_iter().map(|p| p.expect("dense ids")).collect();
        let edges = file
            .edges
            .iter()
            .map(|e| Edge {
                a: NodeId(e.a),
                b: NodeId(e.b),
                length: e.length_m,
                speed_limit: e.speed_mps,
            })
            .collect();
        let graph = RoadGraph::new(nodes, edges)?;
        let buildings = file
            .buildings
            .into_iter()
            .map(|b| Building {
                id: BuildingId(b.id),
                footprint: b.footprint,
                height: b.height_m,
                access_point: Point::ground(b.access[0], b.access[1]),
            })
            .collect();
        let [x, y, z] = file.base_station;
        Scenario::new(graph, buildings, NodeId(file.depot), Point::new(x, y, z))
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        ScenarioFile {
            nodes: s
                .graph
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, p)| NodeRecord {
                    id: i as u32,
                    x: p.x,
                    y: p.y,
                })
                .collect(),
            edges: s
                .graph
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    a: e.a.0,
                    b: e.b.0,
                    length_m: e.length,
                    speed_mps: e.speed_limit,
                })
                .collect(),
            buildings: s
                .buildings
                .into_iter()
                .map(|b| BuildingRecord {
                    id: b.id.0,
                    footprint: b.footprint,
                    height_m: b.height,
                    access: [b.access_point.x, b.access_point.y],
                })
                .collect(),
            depot: s.depot.0,
            base_station: [s.base_station.x, s.base_station.y, s.base_station.z],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_grid_scenario, load_scenario, save_scenario};

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = generate_grid_scenario(3, 3, 100.0, 1, 7).unwrap();
        save_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }

    fn write(dir: &tempfile::TempDir, text: &str) -> std::path::PathBuf {
        let path = dir.path().join("bad.json");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn disconnected_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            r#"{"nodes":[{"id":0,"x":0,"y":0},{"id":1,"x":10,"y":0},{"id":2,"x":50,"y":0}],
                "edges":[{"a":0,"b":1,"length_m":10,"speed_mps":5}],
                "buildings":[],"depot":0,"base_station":[0,0,30]}"#,
        );
        let err = load_scenario(&path).unwrap_err();
        assert!(matches!(err, Error::Invariant(ref m) if m == "graph not connected"), "{err}");
    }

    #[test]
    fn short_edge_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            r#"{"nodes":[{"id":0,"x":0,"y":0},{"id":1,"x":10,"y":0}],
                "edges":[{"a":0,"b":1,"length_m":9.5,"speed_mps":5}],
                "buildings":[],"depot":0,"base_station":[0,0,30]}"#,
        );
        let err = load_scenario(&path).unwrap_err();
        assert!(matches!(err, Error::Invariant(ref m) if m.contains("shorter than endpoint distance")), "{err}");
    }

    #[test]
    fn parse_errors_carry_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "{\n  \"nodes\": [],\n  \"edges\": 3\n}");
        match load_scenario(&path).unwrap_err() {
            Error::Parse { line, source, .. } => {
                assert_eq!(line, 3);
                assert!(source.to_string().contains("invalid type"));
            }
            other => panic!("unexpected {other}"),
        }
        let path = write(&dir, r#"{"nodes": [], "edges": []}"#);
        let err = load_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("missing field `buildings`"), "{err}");
    }
}
