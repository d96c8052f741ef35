//! Planning and simulation of hybrid truck-and-drone last-mile delivery.
//!
//! The crate is organized bottom-up:
//!
//! * [`scenario`]: the planar world (road graph, buildings, depot, base station)
//! * [`jobs`]: categorized delivery sets and their spatial distribution checks
//! * [`routing`]: shortest paths, TSP solvers and the medical-first schedule
//! * [`hybrid`]: en-route drone sortie planning on top of a truck tour
//! * [`simcore`]: discrete-event execution of a plan into a trace
//! * [`netmodel`]: CAM traffic over abstract medium-access models
//! * [`metrics`]: waiting-time statistics, capacity and sweep summaries
//! * [`experiment`]: seeded sweeps that tie everything together

pub mod error;
pub mod experiment;
pub mod hybrid;
pub mod jobs;
pub mod metrics;
pub mod netmodel;
pub mod rng;
pub mod routing;
pub mod scenario;
pub mod simcore;

pub use error::{Error, Result};
pub use hybrid::{FleetConfig, HybridPlan, Sortie};
pub use jobs::{Category, DeliveryJob, DeliverySet, JobId};
pub use routing::{RoutedPath, Solver, Tour};
pub use scenario::{Building, BuildingId, NodeId, Point, RoadGraph, Scenario};
pub use simcore::{DeliveryTrace, SimEvent, VehicleId};
