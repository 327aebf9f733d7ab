//! Seeded instance generation and serialization. The generator is a fixed,
//! portable algorithm (SplitMix64 with keyed substreams) so the same seed
//! produces bit-identical instances on every platform, and the same
//! instance drives every strategy in a comparison batch.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::GroundTruth;
use crate::road_graph::{GraphError, Point2D, RoadNetwork, VertexId};

/// SplitMix64: 64-bit counter-based generator with a strong finalizer.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        mix(self.state)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in 0..bound.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}

fn mix(z: u64) -> u64 {
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Substream keyed independently of draw order: per-edge keys are
/// `(u << 32) | v`; the endpoint-selection stream uses [`HEADER_KEY`].
fn substream(seed: u64, key: u64) -> SplitMix64 {
    SplitMix64::new(mix(seed) ^ mix(key.wrapping_add(0xA076_1D64_78BD_642F)))
}

const HEADER_KEY: u64 = u64::MAX;

/// Interior-fraction clamp distance from either endpoint.
const FRACTION_MARGIN: f64 = 1e-6;

/// A reproducible problem instance over a fixed network.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub seed: u64,
    pub ugv_start: VertexId,
    pub uav_start: VertexId,
    pub destination: VertexId,
    /// Per-edge existence probability, indexed by dense edge id.
    pub edge_probabilities: Vec<f64>,
    pub ground_truth: GroundTruth,
}

/// Vehicle speeds in meters per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedConfig {
    pub v_g: f64,
    pub v_a: f64,
}

impl SpeedConfig {
    pub fn new(v_g: f64, v_a: f64) -> Result<Self, ScenarioError> {
        if !(v_g > 0.0) || !(v_a > 0.0) {
            return Err(ScenarioError::BadSpeed);
        }
        Ok(SpeedConfig { v_g, v_a })
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("instance document parse failure: {0}")]
    Parse(String),
    #[error("instance references unknown edge ({0}, {1})")]
    UnknownEdge(u32, u32),
    #[error("instance covers {found} edges but the network has {expected}")]
    EdgeCountMismatch { found: usize, expected: usize },
    #[error("damage fraction {0} outside the open interval (0, 1)")]
    BadFraction(f64),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("vertex {0} outside the network")]
    BadVertex(u32),
    #[error("ugv start equals destination")]
    DegenerateRoute,
    #[error("speeds must be positive")]
    BadSpeed,
    #[error("grid needs at least 2 rows and 2 columns")]
    GridTooSmall,
}

/// Draws a full instance: per edge, p ~ Uniform[0.6, 1.0], damaged with
/// probability 1 - p, damage fraction ~ Uniform(0, 1) clamped interior;
/// endpoints uniform with `ugv_start != destination`. Edge draws come from
/// per-edge substreams, so they are independent of edge insertion order.
pub fn generate_instance(network: &RoadNetwork, seed: u64) -> InstanceSpec {
    let mut probabilities = Vec::with_capacity(network.edge_count());
    let mut damage = HashMap::new();
    for (idx, edge) in network.edges().iter().enumerate() {
        let key = ((edge.u.0 as u64) << 32) | edge.v.0 as u64;
        let mut rng = substream(seed, key);
        let p = 0.6 + 0.4 * rng.next_f64();
        probabilities.push(p);
        if rng.next_f64() > p {
            let fraction = rng
                .next_f64()
                .clamp(FRACTION_MARGIN, 1.0 - FRACTION_MARGIN);
            damage.insert(crate::road_graph::EdgeId(idx as u32), fraction);
        }
    }
    let mut header = substream(seed, HEADER_KEY);
    let n = network.vertex_count() as u64;
    let ugv_start = VertexId(header.next_below(n) as u32);
    let destination = loop {
        let d = VertexId(header.next_below(n) as u32);
        if d != ugv_start {
            break d;
        }
    };
    let uav_start = VertexId(header.next_below(n) as u32);
    InstanceSpec {
        seed,
        ugv_start,
        uav_start,
        destination,
        edge_probabilities: probabilities,
        ground_truth: GroundTruth::new(damage),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceEdgeDoc {
    u: u32,
    v: u32,
    p: f64,
    damaged: bool,
    fraction: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    seed: u64,
    ugv_start: u32,
    uav_start: u32,
    destination: u32,
    edges: Vec<InstanceEdgeDoc>,
}

impl InstanceSpec {
    /// Serializes to the instance document format, edges in dense id order.
    pub fn to_document(&self, network: &RoadNetwork) -> String {
        let edges = network
            .edges()
            .iter()
            .enumerate()
            .map(|(idx, e)| {
                let id = crate::road_graph::EdgeId(idx as u32);
                let fraction = self.ground_truth.damage_fraction(id);
                InstanceEdgeDoc {
                    u: e.u.0,
                    v: e.v.0,
                    p: self.edge_probabilities[idx],
                    damaged: fraction.is_some(),
                    fraction,
                }
            })
            .collect();
        let doc = InstanceDoc {
            seed: self.seed,
            ugv_start: self.ugv_start.0,
            uav_start: self.uav_start.0,
            destination: self.destination.0,
            edges,
        };
        serde_json::to_string_pretty(&doc).unwrap()
    }

    /// Parses and validates an instance document against its network.
    pub fn from_document(text: &str, network: &RoadNetwork) -> Result<Self, ScenarioError> {
        let doc: InstanceDoc =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let n = network.vertex_count() as u32;
        for v in [doc.ugv_start, doc.uav_start, doc.destination] {
            if v >= n {
                return Err(ScenarioError::BadVertex(v));
            }
        }
        if doc.ugv_start == doc.destination {
            return Err(ScenarioError::DegenerateRoute);
        }
        if doc.edges.len() != network.edge_count() {
            return Err(ScenarioError::EdgeCountMismatch {
                found: doc.edges.len(),
                expected: network.edge_count(),
            });
        }
        let mut probabilities = vec![None; network.edge_count()];
        let mut damage = HashMap::new();
        for entry in &doc.edges {
            let id = network
                .edge_between(VertexId(entry.u), VertexId(entry.v))
                .ok_or(ScenarioError::UnknownEdge(entry.u, entry.v))?;
            if !(0.0..=1.0).contains(&entry.p) {
                return Err(ScenarioError::BadProbability(entry.p));
            }
            if probabilities[id.index()].replace(entry.p).is_some() {
                return Err(ScenarioError::Parse(format!(
                    "duplicate edge entry ({}, {})",
                    entry.u, entry.v
                )));
            }
            match (entry.damaged, entry.fraction) {
                (true, Some(f)) if f > 0.0 && f < 1.0 => {
                    damage.insert(id, f);
                }
                (true, Some(f)) => return Err(ScenarioError::BadFraction(f)),
                (true, None) => {
                    return Err(ScenarioError::Parse(
                        "damaged edge without a fraction".into(),
                    ))
                }
                (false, Some(_)) => {
                    return Err(ScenarioError::Parse(
                        "fraction given for an undamaged edge".into(),
                    ))
                }
                (false, None) => {}
            }
        }
        Ok(InstanceSpec {
            seed: doc.seed,
            ugv_start: VertexId(doc.ugv_start),
            uav_start: VertexId(doc.uav_start),
            destination: VertexId(doc.destination),
            edge_probabilities: probabilities.into_iter().map(Option::unwrap).collect(),
            ground_truth: GroundTruth::new(damage),
        })
    }
}

/// rows x cols lattice with the given spacing in meters; vertex id of cell
/// (r, c) is `r * cols + c`, horizontal edges listed before the vertical
/// edge at each cell.
pub fn synthetic_grid(rows: u32, cols: u32, spacing: f64) -> Result<RoadNetwork, ScenarioError> {
    if rows < 2 || cols < 2 {
        return Err(ScenarioError::GridTooSmall);
    }
    if !(spacing > 0.0) {
        return Err(ScenarioError::Parse("spacing must be positive".into()));
    }
    let mut points = Vec::with_capacity((rows * cols) as usize);
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            points.push(Point2D::new(c as f64 * spacing, r as f64 * spacing));
            let id = r * cols + c;
            if c + 1 < cols {
                edges.push((id, id + 1, spacing));
            }
            if r + 1 < rows {
                edges.push((id, id + cols, spacing));
            }
        }
    }
    RoadNetwork::new(points, edges).map_err(|e: GraphError| ScenarioError::Parse(e.to_string()))
}
