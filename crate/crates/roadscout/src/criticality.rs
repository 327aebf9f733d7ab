//! Edge criticality via the Kemeny constant of the network with that edge
//! removed, computed once per network from the original graph.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::road_graph::{BeliefGraph, EdgeId, EdgeStatus, Path, RoadNetwork};

/// Transition weighting of the random walk used for the Kemeny constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WalkWeighting {
    /// Uniform over incident edges.
    #[default]
    Uniform,
    /// Proportional to inverse edge length (shorter roads are likelier
    /// steps).
    InverseLength,
}

#[derive(Debug, Error)]
pub enum KemenyError {
    #[error("graph has fewer than 2 vertices")]
    TooSmall,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("fundamental matrix is singular")]
    Singular,
}

/// Per-edge criticality; +infinity exactly for bridges.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityTable {
    values: Vec<f64>,
}

impl CriticalityTable {
    pub fn value(&self, e: EdgeId) -> f64 {
        self.values[e.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        CriticalityTable { values }
    }

    /// Computes the full table for a network; see [`edge_criticalities`].
    pub fn build(network: &RoadNetwork, weighting: WalkWeighting) -> Self {
        edge_criticalities(network, weighting)
    }
}

/// Kemeny constant of the weighted random walk on an explicit edge list over
/// `n` vertices, as trace of the fundamental matrix minus one.
pub fn kemeny_constant_of_edges(
    n: usize,
    edges: &[(usize, usize, f64)],
    weighting: WalkWeighting,
) -> Result<f64, KemenyError> {
    if n < 2 {
        return Err(KemenyError::TooSmall);
    }
    if !connected(n, edges) {
        return Err(KemenyError::Disconnected);
    }
    let mut weight = vec![0.0f64; n];
    let mut w = DMatrix::<f64>::zeros(n, n);
    for &(a, b, length) in edges {
        let step = match weighting {
            WalkWeighting::Uniform => 1.0,
            WalkWeighting::InverseLength => 1.0 / length,
        };
        w[(a, b)] += step;
        w[(b, a)] += step;
        weight[a] += step;
        weight[b] += step;
    }
    let total: f64 = weight.iter().sum();
    // M = I - P + 1 pi^T with P the row-normalized walk and pi its
    // stationary distribution. K = tr(M^-1) - 1.
    let mut m = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += weight[j] / total - w[(i, j)] / weight[i];
        }
    }
    let inverse = m.try_inverse().ok_or(KemenyError::Singular)?;
    Ok(inverse.trace() - 1.0)
}

/// Kemeny constant of the full network's random walk.
pub fn kemeny_constant(
    network: &RoadNetwork,
    weighting: WalkWeighting,
) -> Result<f64, KemenyError> {
    let edges: Vec<_> = network
        .edges()
        .iter()
        .map(|e| (e.u.index(), e.v.index(), e.length))
        .collect();
    kemeny_constant_of_edges(network.vertex_count(), &edges, weighting)
}

/// Criticality of every edge: the Kemeny constant of the network with that
/// edge removed, or +infinity when removal disconnects the graph. Computed
/// from the original network only.
pub fn edge_criticalities(network: &RoadNetwork, weighting: WalkWeighting) -> CriticalityTable {
    let bridges = find_bridges(network);
    let n = network.vertex_count();
    let all: Vec<_> = network
        .edges()
        .iter()
        .map(|e| (e.u.index(), e.v.index(), e.length))
        .collect();
    let mut values = Vec::with_capacity(all.len());
    for idx in 0..all.len() {
        if bridges[idx] {
            values.push(f64::INFINITY);
            continue;
        }
        let remaining: Vec<_> = all
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, e)| *e)
            .collect();
        let k = kemeny_constant_of_edges(n, &remaining, weighting)
            .expect("non-bridge removal keeps the graph connected");
        values.push(k);
    }
    CriticalityTable { values }
}

/// First edge along the path (scanning from the vehicle end toward the
/// destination, strict-greater updates) attaining the maximum criticality
/// among Uninspected edges; `None` when every path edge is inspected.
pub fn most_critical_uninspected(
    table: &CriticalityTable,
    path: &Path,
    belief: &BeliefGraph,
) -> Option<EdgeId> {
    let network = belief.network();
    let mut best: Option<(EdgeId, f64)> = None;
    for edge in path.edges(network) {
        if belief.status(edge) != EdgeStatus::Uninspected {
            continue;
        }
        let value = table.value(edge);
        match best {
            Some((_, current)) if value <= current => {}
            _ => best = Some((edge, value)),
        }
    }
    best.map(|(e, _)| e)
}

/// Bridge flags per edge index (iterative Tarjan lowlink pass).
pub fn find_bridges(network: &RoadNetwork) -> Vec<bool> {
    let n = network.vertex_count();
    let mut bridges = vec![false; network.edge_count()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut timer = 0usize;
    // (vertex, incoming edge, neighbor cursor)
    let mut stack: Vec<(usize, Option<EdgeId>, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        stack.push((root, None, 0));
        while let Some(&mut (v, via, ref mut cursor)) = stack.last_mut() {
            let neighbors = network.neighbors(crate::road_graph::VertexId(v as u32));
            if *cursor < neighbors.len() {
                let (w, e) = neighbors[*cursor];
                *cursor += 1;
                if Some(e) == via {
                    continue;
                }
                let w = w.index();
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, Some(e), 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        bridges[via.unwrap().index()] = true;
                    }
                }
            }
        }
    }
    bridges
}

fn connected(n: usize, edges: &[(usize, usize, f64)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b, _) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

/// Content hash of a network, for keying persisted criticality tables.
pub fn network_content_hash(network: &RoadNetwork) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(network.to_document().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Criticality cache document persisted alongside a graph. Bridge entries
/// (+infinity) are encoded as `null` since JSON has no infinity.
#[derive(Debug, Serialize, Deserialize)]
pub struct CriticalityCache {
    pub graph_hash: String,
    pub weighting: WalkWeighting,
    pub values: Vec<Option<f64>>,
}

impl CriticalityCache {
    pub fn build(network: &RoadNetwork, weighting: WalkWeighting) -> Self {
        let table = edge_criticalities(network, weighting);
        CriticalityCache {
            graph_hash: network_content_hash(network),
            weighting,
            values: table
                .values()
                .iter()
                .map(|&v| if v.is_finite() { Some(v) } else { None })
                .collect(),
        }
    }

    /// Returns the cached table when the hash and weighting match.
    pub fn validate(
        &self,
        network: &RoadNetwork,
        weighting: WalkWeighting,
    ) -> Option<CriticalityTable> {
        if self.weighting == weighting && self.graph_hash == network_content_hash(network) {
            Some(CriticalityTable::from_values(
                self.values
                    .iter()
                    .map(|v| v.unwrap_or(f64::INFINITY))
                    .collect(),
            ))
        } else {
            None
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
