//! Road-network representation with a planar embedding, plus deterministic
//! shortest-path and k-shortest-path queries over a mutable status overlay.
//!
//! The network itself is immutable after load. Everything a planner learns
//! during a run lives in the [`BeliefGraph`] overlay: per-edge status and
//! existence probabilities.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense vertex index, valid within a single network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense edge index into [`RoadNetwork::edges`]. The canonical (u, v) pair
/// with u < v is stored on the [`Edge`] itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Planar coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Undirected road segment with canonical endpoints u < v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    /// Road length in meters. May exceed the straight-line chord between the
    /// endpoints, never fall meaningfully below it.
    pub length: f64,
}

impl Edge {
    /// The endpoint opposite to `side`.
    pub fn other(&self, side: VertexId) -> VertexId {
        if side == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn touches(&self, vertex: VertexId) -> bool {
        self.u == vertex || self.v == vertex
    }
}

/// Knowledge state of an edge. The lifecycle is monotone: `Uninspected` may
/// become `Safe` or `Damaged`; both of those are terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeStatus {
    Uninspected,
    Safe,
    Damaged,
}

/// A position on the network: either a vertex, or an interior point of an
/// edge. `fraction` is arc length measured from the canonical lower-id
/// endpoint; `heading` is the endpoint the occupant is oriented toward (for
/// a stopped vehicle on a damaged edge this is the only accessible side).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GraphPosition {
    AtVertex(VertexId),
    OnEdge {
        edge: EdgeId,
        fraction: f64,
        heading: VertexId,
    },
}

/// Simple path as an ordered vertex sequence. `total_length` is the sum of
/// member edge lengths accumulated in path order, so equal vertex sequences
/// always carry bit-identical lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub vertices: Vec<VertexId>,
    pub total_length: f64,
}

impl Path {
    /// Builds a path from a vertex sequence, summing member edge lengths in
    /// order. Panics if consecutive vertices are not adjacent; callers only
    /// construct paths from sequences produced by graph queries.
    pub fn from_vertices(network: &RoadNetwork, vertices: Vec<VertexId>) -> Path {
        let mut total = 0.0;
        for pair in vertices.windows(2) {
            let edge = network
                .edge_between(pair[0], pair[1])
                .expect("consecutive path vertices must be adjacent");
            total += network.edge(edge).length;
        }
        Path {
            vertices,
            total_length: total,
        }
    }

    pub fn start(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn end(&self) -> VertexId {
        *self.vertices.last().unwrap()
    }

    /// Member edges in travel order.
    pub fn edges<'a>(&'a self, network: &'a RoadNetwork) -> impl Iterator<Item = EdgeId> + 'a {
        self.vertices
            .windows(2)
            .map(move |pair| network.edge_between(pair[0], pair[1]).unwrap())
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph document parse failure: {0}")]
    Parse(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("duplicate or parallel edge between {0} and {1}")]
    ParallelEdge(u32, u32),
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("nonpositive length on edge ({0}, {1})")]
    NonpositiveLength(u32, u32),
    #[error("edge ({0}, {1}) length {2} is shorter than its chord {3} beyond tolerance")]
    ChordViolation(u32, u32, f64, f64),
    #[error("edge references unknown vertex {0}")]
    UnknownVertex(u32),
    #[error("non-finite coordinate at vertex {0}")]
    BadCoordinate(u32),
    #[error("status transition out of a terminal state on edge {0}")]
    TerminalStatus(EdgeId),
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexDoc {
    id: u32,
    x: f64,
    y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeDoc {
    u: u32,
    v: u32,
    length: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphDoc {
    vertices: Vec<VertexDoc>,
    edges: Vec<EdgeDoc>,
}

/// Immutable embedded road network.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    points: Vec<Point2D>,
    edges: Vec<Edge>,
    /// Per-vertex (neighbor, edge) lists, sorted by neighbor id.
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
    edge_lookup: HashMap<(u32, u32), EdgeId>,
}

impl RoadNetwork {
    /// Assembles and validates a network from raw parts.
    pub fn new(points: Vec<Point2D>, raw_edges: Vec<(u32, u32, f64)>) -> Result<Self, GraphError> {
        Self::with_chord_tolerance(points, raw_edges, 1e-6)
    }

    /// `chord_tolerance` is the absolute slack allowed for an edge length
    /// below the straight-line distance between its endpoints.
    pub fn with_chord_tolerance(
        points: Vec<Point2D>,
        raw_edges: Vec<(u32, u32, f64)>,
        chord_tolerance: f64,
    ) -> Result<Self, GraphError> {
        let n = points.len();
        for (i, p) in points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(GraphError::BadCoordinate(i as u32));
            }
        }
        let mut edges = Vec::with_capacity(raw_edges.len());
        let mut edge_lookup = HashMap::new();
        let mut adjacency = vec![Vec::new(); n];
        for (a, b, length) in raw_edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if a as usize >= n {
                return Err(GraphError::UnknownVertex(a));
            }
            if b as usize >= n {
                return Err(GraphError::UnknownVertex(b));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !(length > 0.0) || !length.is_finite() {
                return Err(GraphError::NonpositiveLength(u, v));
            }
            let chord = points[u as usize].distance(&points[v as usize]);
            if length < chord - chord_tolerance {
                return Err(GraphError::ChordViolation(u, v, length, chord));
            }
            let id = EdgeId(edges.len() as u32);
            if edge_lookup.insert((u, v), id).is_some() {
                return Err(GraphError::ParallelEdge(u, v));
            }
            edges.push(Edge {
                u: VertexId(u),
                v: VertexId(v),
                length,
            });
            adjacency[u as usize].push((VertexId(v), id));
            adjacency[v as usize].push((VertexId(u), id));
        }
        for list in &mut adjacency {
            list.sort_by_key(|(neighbor, _)| *neighbor);
        }
        let network = RoadNetwork {
            points,
            edges,
            adjacency,
            edge_lookup,
        };
        if !network.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(network)
    }

    /// Parses the graph document format (see the crate docs for the schema).
    pub fn from_document(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc =
            serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        let n = doc.vertices.len();
        let mut points = vec![None; n];
        for v in &doc.vertices {
            let slot = points
                .get_mut(v.id as usize)
                .ok_or(GraphError::Parse(format!(
                    "vertex id {} outside dense range 0..{}",
                    v.id, n
                )))?;
            if slot.is_some() {
                return Err(GraphError::Parse(format!("duplicate vertex id {}", v.id)));
            }
            *slot = Some(Point2D::new(v.x, v.y));
        }
        let points: Vec<Point2D> = points
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or(GraphError::Parse("vertex ids are not dense".into()))?;
        let raw = doc.edges.iter().map(|e| (e.u, e.v, e.length)).collect();
        Self::new(points, raw)
    }

    /// Serializes back to the graph document format.
    pub fn to_document(&self) -> String {
        let doc = GraphDoc {
            vertices: self
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| VertexDoc {
                    id: i as u32,
                    x: p.x,
                    y: p.y,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    u: e.u.0,
                    v: e.v.0,
                    length: e.length,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).unwrap()
    }

    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn point(&self, v: VertexId) -> Point2D {
        self.points[v.index()]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.index()]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        let key = if a.0 < b.0 { (a.0, b.0) } else { (b.0, a.0) };
        self.edge_lookup.get(&key).copied()
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[v.index()]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v.index()].len()
    }

    fn is_connected(&self) -> bool {
        if self.points.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.points.len()];
        let mut stack = vec![VertexId(0)];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in self.neighbors(v) {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.points.len()
    }

    /// Coordinates of a graph position; interior edge positions use
    /// straight-chord interpolation between the endpoint coordinates.
    pub fn euclidean_point(&self, position: GraphPosition) -> Point2D {
        match position {
            GraphPosition::AtVertex(v) => self.point(v),
            GraphPosition::OnEdge { edge, fraction, .. } => {
                let e = self.edge(edge);
                let a = self.point(e.u);
                let b = self.point(e.v);
                Point2D::new(a.x + fraction * (b.x - a.x), a.y + fraction * (b.y - a.y))
            }
        }
    }
}

/// Parses a graph document into a validated network.
pub fn load_network(document: &str) -> Result<RoadNetwork, GraphError> {
    RoadNetwork::from_document(document)
}

/// The planners' view of the network: per-edge status plus existence
/// probabilities. Damaged edges are excluded from all path queries; Safe
/// edges carry probability 1.
#[derive(Debug, Clone)]
pub struct BeliefGraph {
    network: Arc<RoadNetwork>,
    status: Vec<EdgeStatus>,
    probability: Vec<f64>,
}

impl BeliefGraph {
    pub fn new(network: Arc<RoadNetwork>, probabilities: Vec<f64>) -> Self {
        assert_eq!(probabilities.len(), network.edge_count());
        BeliefGraph {
            status: vec![EdgeStatus::Uninspected; network.edge_count()],
            probability: probabilities,
            network,
        }
    }

    /// All edges uninspected with probability 1.
    pub fn all_uncertain(network: Arc<RoadNetwork>) -> Self {
        let probs = vec![1.0; network.edge_count()];
        Self::new(network, probs)
    }

    pub fn network(&self) -> &Arc<RoadNetwork> {
        &self.network
    }

    pub fn status(&self, e: EdgeId) -> EdgeStatus {
        self.status[e.index()]
    }

    pub fn probability(&self, e: EdgeId) -> f64 {
        match self.status[e.index()] {
            EdgeStatus::Safe => 1.0,
            EdgeStatus::Damaged => 0.0,
            EdgeStatus::Uninspected => self.probability[e.index()],
        }
    }

    pub fn passable(&self, e: EdgeId) -> bool {
        self.status[e.index()] != EdgeStatus::Damaged
    }

    /// Monotone status update. Transitions out of Safe or Damaged are
    /// rejected; marking an edge with its current terminal status is a no-op.
    pub fn set_status(&mut self, e: EdgeId, status: EdgeStatus) -> Result<(), GraphError> {
        let current = self.status[e.index()];
        if current == status {
            return Ok(());
        }
        if current != EdgeStatus::Uninspected {
            return Err(GraphError::TerminalStatus(e));
        }
        self.status[e.index()] = status;
        Ok(())
    }

    pub fn mark_safe(&mut self, e: EdgeId) -> Result<(), GraphError> {
        self.set_status(e, EdgeStatus::Safe)
    }

    pub fn mark_damaged(&mut self, e: EdgeId) -> Result<(), GraphError> {
        self.set_status(e, EdgeStatus::Damaged)
    }

    /// Minimum-length path over non-Damaged edges, or `None` when
    /// unreachable. Ties break to the lexicographically smallest vertex
    /// sequence. For a mid-edge origin both endpoints are candidate entry
    /// points with access costs `t*c` and `(1-t)*c`; when the occupied edge
    /// is Damaged only the `heading` endpoint is accessible. The returned
    /// path starts at the chosen entry endpoint and its `total_length`
    /// covers member edges only; the access leg is the caller's to account.
    pub fn shortest_path(&self, from: GraphPosition, to: VertexId) -> Option<Path> {
        self.shortest_path_filtered(from, to, |_| true)
    }

    /// Like [`shortest_path`](Self::shortest_path) with an extra per-edge
    /// admission predicate on top of the non-Damaged rule.
    pub fn shortest_path_filtered(
        &self,
        from: GraphPosition,
        to: VertexId,
        allow: impl Fn(EdgeId) -> bool,
    ) -> Option<Path> {
        let seeds = self.entry_points(from);
        dijkstra(
            &self.network,
            &seeds,
            to,
            |e| self.passable(e) && allow(e),
            |_| true,
        )
        .map(|(path, _)| path)
    }

    /// Candidate entry vertices with their access costs for a query origin.
    pub fn entry_points(&self, from: GraphPosition) -> Vec<(VertexId, f64)> {
        match from {
            GraphPosition::AtVertex(v) => vec![(v, 0.0)],
            GraphPosition::OnEdge {
                edge,
                fraction,
                heading,
            } => {
                let e = self.network.edge(edge);
                let to_u = fraction * e.length;
                let to_v = (1.0 - fraction) * e.length;
                if self.status(edge) == EdgeStatus::Damaged {
                    // Stopped against a known damage point: only the heading
                    // side remains reachable.
                    let cost = if heading == e.u { to_u } else { to_v };
                    vec![(heading, cost)]
                } else {
                    let mut seeds = vec![(e.u, to_u), (e.v, to_v)];
                    seeds.sort_by_key(|(v, _)| *v);
                    seeds
                }
            }
        }
    }

    /// Yen's k shortest loopless paths in nondecreasing length with
    /// lexicographic tie-break; fewer than k when fewer exist.
    pub fn k_shortest_paths(&self, from: VertexId, to: VertexId, k: usize) -> Vec<Path> {
        assert!(k >= 1);
        let net = &self.network;
        let passable = |e: EdgeId| self.passable(e);
        let first = match dijkstra(net, &[(from, 0.0)], to, &passable, |_| true) {
            Some((p, _)) => p,
            None => return Vec::new(),
        };
        let mut accepted: Vec<Path> = vec![first];
        let mut candidates: Vec<Path> = Vec::new();
        let mut seen: HashSet<Vec<VertexId>> = HashSet::new();
        seen.insert(accepted[0].vertices.clone());

        while accepted.len() < k {
            let prev = accepted.last().unwrap().clone();
            for spur_index in 0..prev.vertices.len() - 1 {
                let spur_node = prev.vertices[spur_index];
                let root = &prev.vertices[..=spur_index];

                let mut banned_edges: HashSet<EdgeId> = HashSet::new();
                for path in accepted.iter().chain(candidates.iter()) {
                    if path.vertices.len() > spur_index && path.vertices[..=spur_index] == *root {
                        if let Some(next) = path.vertices.get(spur_index + 1) {
                            if let Some(e) = net.edge_between(spur_node, *next) {
                                banned_edges.insert(e);
                            }
                        }
                    }
                }
                let mut allowed_vertex = vec![true; net.vertex_count()];
                for v in &root[..spur_index] {
                    allowed_vertex[v.index()] = false;
                }

                let spur = dijkstra(
                    net,
                    &[(spur_node, 0.0)],
                    to,
                    |e| passable(e) && !banned_edges.contains(&e),
                    |v| allowed_vertex[v.index()],
                );
                if let Some((spur_path, _)) = spur {
                    let mut vertices = root[..spur_index].to_vec();
                    vertices.extend_from_slice(&spur_path.vertices);
                    if seen.insert(vertices.clone()) {
                        candidates.push(Path::from_vertices(net, vertices));
                    }
                }
            }
            // Pick the best remaining candidate by (length, sequence).
            let best = candidates
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| cmp_path(a, b));
            match best {
                Some((i, _)) => accepted.push(candidates.swap_remove(i)),
                None => break,
            }
        }
        accepted
    }
}

fn cmp_path(a: &Path, b: &Path) -> Ordering {
    a.total_length
        .partial_cmp(&b.total_length)
        .unwrap()
        .then_with(|| a.vertices.cmp(&b.vertices))
}

struct QueueEntry {
    cost: f64,
    path: Vec<VertexId>,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.path == other.path
    }
}
impl Eq for QueueEntry {}
impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueEntry {
    // Reversed so the BinaryHeap pops the smallest (cost, sequence) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap()
            .then_with(|| other.path.cmp(&self.path))
    }
}

/// Dijkstra over admitted edges/vertices with deterministic lexicographic
/// tie-break on the vertex sequence. Returns the path (starting at the
/// chosen seed) and that seed's access cost. Costs in the search include
/// access costs; the returned `total_length` covers member edges only.
fn dijkstra(
    network: &RoadNetwork,
    seeds: &[(VertexId, f64)],
    to: VertexId,
    edge_allowed: impl Fn(EdgeId) -> bool,
    vertex_allowed: impl Fn(VertexId) -> bool,
) -> Option<(Path, f64)> {
    let mut heap = BinaryHeap::new();
    let mut settled = vec![false; network.vertex_count()];
    let mut access: HashMap<VertexId, f64> = HashMap::new();
    for &(seed, cost) in seeds {
        if vertex_allowed(seed) {
            // Keep the cheaper access cost if both seeds coincide.
            let slot = access.entry(seed).or_insert(cost);
            if cost < *slot {
                *slot = cost;
            }
            heap.push(QueueEntry {
                cost,
                path: vec![seed],
            });
        }
    }
    while let Some(entry) = heap.pop() {
        let last = *entry.path.last().unwrap();
        if settled[last.index()] {
            continue;
        }
        settled[last.index()] = true;
        if last == to {
            let access_cost = access[&entry.path[0]];
            let path = Path::from_vertices(network, entry.path);
            return Some((path, access_cost));
        }
        for &(next, edge) in network.neighbors(last) {
            if settled[next.index()] || !vertex_allowed(next) || !edge_allowed(edge) {
                continue;
            }
            let mut path = entry.path.clone();
            path.push(next);
            heap.push(QueueEntry {
                cost: entry.cost + network.edge(edge).length,
                path,
            });
        }
    }
    None
}
