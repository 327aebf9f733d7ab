//! Deterministic discrete-event simulator and strategy library for
//! cooperative ground/aerial route planning on road networks with hidden
//! impassable edges.
//!
//! A ground vehicle must reach a destination over a road graph in which
//! some edges are secretly damaged at an interior point; one or more aerial
//! vehicles inspect edges (or deadhead between vertices in a straight line)
//! to prune damaged roads from the shared belief before the ground vehicle
//! wastes time on them. Whenever any vehicle must stop — damage hit,
//! inspection finished, destination reached — every vehicle replans.
//!
//! - [`road_graph`]: the embedded network, belief overlay, and
//!   deterministic shortest / k-shortest path queries.
//! - [`criticality`]: Kemeny-constant edge criticality.
//! - [`mpsp`]: most probable shortest path estimation (Karp-Luby).
//! - [`engine`]: the event-driven simulation loop.
//! - [`strategies`]: the seven planning strategies.
//! - [`scenario`]: seeded instance generation and (de)serialization.
//!
//! Graph document schema (JSON):
//!
//! ```json
//! {
//!   "vertices": [{"id": 0, "x": 0.0, "y": 0.0}],
//!   "edges": [{"u": 0, "v": 1, "length": 100.0}]
//! }
//! ```
//!
//! Instance document schema (JSON):
//!
//! ```json
//! {
//!   "seed": 7, "ugv_start": 0, "uav_start": 3, "destination": 8,
//!   "edges": [{"u": 0, "v": 1, "p": 0.83, "damaged": false, "fraction": null}]
//! }
//! ```

pub mod criticality;
pub mod engine;
pub mod mpsp;
pub mod road_graph;
pub mod scenario;
pub mod strategies;

pub use engine::{run, EventKind, EventRecord, GroundTruth, RunSetup, SimOutcome};
pub use road_graph::{
    load_network, BeliefGraph, EdgeId, EdgeStatus, GraphPosition, Path, RoadNetwork, VertexId,
};
pub use scenario::{generate_instance, synthetic_grid, InstanceSpec, SpeedConfig};
pub use strategies::{PlanAssignment, Strategy, StrategyKind};
