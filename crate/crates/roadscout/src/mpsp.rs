//! Most probable shortest path estimation over the belief graph: sampled
//! candidate generation plus a Karp-Luby importance-sampling estimator for
//! the probability that a candidate is the realized shortest path.

use rand::Rng;

use crate::road_graph::{BeliefGraph, EdgeId, EdgeStatus, GraphPosition, Path, VertexId};

/// One realization of edge presence. Safe edges are always present, Damaged
/// edges always absent; the origin's occupied edge, when given, is treated
/// as present (it is being stood upon).
#[derive(Debug, Clone)]
pub struct WorldSample {
    present: Vec<bool>,
}

impl WorldSample {
    pub fn present(&self, e: EdgeId) -> bool {
        self.present[e.index()]
    }
}

/// Candidate paths sorted by (length, sequence) with estimated
/// shortest-path probabilities.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub paths: Vec<Path>,
    pub sp_probabilities: Vec<f64>,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Effective existence probability used in MPSP computations.
fn edge_probability(belief: &BeliefGraph, occupied: Option<EdgeId>, e: EdgeId) -> f64 {
    if occupied == Some(e) {
        return 1.0;
    }
    belief.probability(e)
}

/// Independent Bernoulli draw per non-terminal edge.
pub fn sample_world(
    belief: &BeliefGraph,
    occupied: Option<EdgeId>,
    rng: &mut impl Rng,
) -> WorldSample {
    let n = belief.network().edge_count();
    let mut present = Vec::with_capacity(n);
    for i in 0..n {
        let e = EdgeId(i as u32);
        let p = match belief.status(e) {
            EdgeStatus::Safe => 1.0,
            EdgeStatus::Damaged => 0.0,
            EdgeStatus::Uninspected => edge_probability(belief, occupied, e),
        };
        present.push(if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            rng.gen::<f64>() < p
        });
    }
    WorldSample { present }
}

/// Samples `m` worlds and collects the shortest path of each connected one,
/// deduplicated and sorted by (length, sequence).
pub fn generate_candidates(
    belief: &BeliefGraph,
    from: GraphPosition,
    to: VertexId,
    m: usize,
    rng: &mut impl Rng,
) -> Vec<Path> {
    assert!(m >= 1);
    let occupied = match from {
        GraphPosition::OnEdge { edge, .. } => Some(edge),
        GraphPosition::AtVertex(_) => None,
    };
    let mut paths: Vec<Path> = Vec::new();
    for _ in 0..m {
        let world = sample_world(belief, occupied, rng);
        if let Some(path) = belief.shortest_path_filtered(from, to, |e| world.present(e)) {
            if !paths.iter().any(|p| p.vertices == path.vertices) {
                paths.push(path);
            }
        }
    }
    paths.sort_by(|a, b| {
        a.total_length
            .partial_cmp(&b.total_length)
            .unwrap()
            .then_with(|| a.vertices.cmp(&b.vertices))
    });
    paths
}

/// Estimates Pr[candidate j exists and no earlier (shorter) candidate
/// exists] as Pr[E_j] * (1 - U) where U is the Karp-Luby estimate of
/// Pr[union of earlier candidates | E_j] from `trials` samples. The first
/// candidate needs no Monte Carlo and is returned exactly.
pub fn estimate_sp_probability(
    candidates: &[Path],
    j: usize,
    belief: &BeliefGraph,
    occupied: Option<EdgeId>,
    trials: usize,
    rng: &mut impl Rng,
) -> f64 {
    assert!(j < candidates.len(), "candidate index out of range");
    let network = belief.network();
    let edge_sets: Vec<Vec<EdgeId>> = candidates[..=j]
        .iter()
        .map(|p| p.edges(network).collect())
        .collect();
    let p_of = |e: EdgeId| edge_probability(belief, occupied, e);

    let own: f64 = edge_sets[j].iter().map(|&e| p_of(e)).product();
    if j == 0 || own == 0.0 {
        return own;
    }

    // Conditional weights Pr[E_i | E_j]: product over i's edges outside j.
    let weights: Vec<f64> = (0..j)
        .map(|i| {
            edge_sets[i]
                .iter()
                .filter(|e| !edge_sets[j].contains(e))
                .map(|&e| p_of(e))
                .product()
        })
        .collect();
    let weight_sum: f64 = weights.iter().sum();
    if weight_sum == 0.0 {
        return own;
    }

    // The only edges whose presence matters are those on candidates 0..=j.
    let mut relevant: Vec<EdgeId> = Vec::new();
    for set in &edge_sets {
        for &e in set {
            if !relevant.contains(&e) {
                relevant.push(e);
            }
        }
    }
    let slot_of = |e: EdgeId| relevant.iter().position(|&r| r == e).unwrap();
    let member_slots: Vec<Vec<usize>> = edge_sets
        .iter()
        .map(|set| set.iter().map(|&e| slot_of(e)).collect())
        .collect();

    let mut hits = 0usize;
    let mut present = vec![false; relevant.len()];
    for _ in 0..trials {
        // Select i < j with probability proportional to its weight.
        let mut pick = rng.gen::<f64>() * weight_sum;
        let mut chosen = j - 1;
        for (i, w) in weights.iter().enumerate() {
            if pick < *w {
                chosen = i;
                break;
            }
            pick -= w;
        }
        // Sample a world conditioned on E_chosen and E_j.
        for (slot, &e) in relevant.iter().enumerate() {
            present[slot] = {
                let p = p_of(e);
                p >= 1.0 || rng.gen::<f64>() < p
            };
        }
        for &slot in &member_slots[chosen] {
            present[slot] = true;
        }
        for &slot in &member_slots[j] {
            present[slot] = true;
        }
        // Count the trial iff `chosen` is the minimal index fully present.
        let minimal = (0..=chosen)
            .find(|&i| member_slots[i].iter().all(|&s| present[s]))
            .unwrap();
        if minimal == chosen {
            hits += 1;
        }
    }
    let union_estimate = (weight_sum * hits as f64 / trials as f64).clamp(0.0, 1.0);
    own * (1.0 - union_estimate)
}

/// Full MPSP query: candidate generation, per-candidate estimation, argmax.
/// Ties resolve to the earlier candidate, which by the candidate ordering
/// means shorter length then lexicographically smaller sequence.
pub fn mpsp_path(
    belief: &BeliefGraph,
    from: GraphPosition,
    to: VertexId,
    m: usize,
    trials: usize,
    rng: &mut impl Rng,
) -> Option<(Path, CandidateSet)> {
    assert!(m >= 1 && trials >= 1);
    let occupied = match from {
        GraphPosition::OnEdge { edge, .. } => Some(edge),
        GraphPosition::AtVertex(_) => None,
    };
    let paths = generate_candidates(belief, from, to, m, rng);
    if paths.is_empty() {
        return None;
    }
    let sp_probabilities: Vec<f64> = (0..paths.len())
        .map(|j| estimate_sp_probability(&paths, j, belief, occupied, trials, rng))
        .collect();
    let mut best = 0;
    for j in 1..paths.len() {
        if sp_probabilities[j] > sp_probabilities[best] {
            best = j;
        }
    }
    let chosen = paths[best].clone();
    Some((
        chosen,
        CandidateSet {
            paths,
            sp_probabilities,
        },
    ))
}

/// First edge along the path (scanning from the vehicle end, strict-less
/// updates) among Uninspected edges with minimal existence probability.
pub fn least_probable_uninspected(path: &Path, belief: &BeliefGraph) -> Option<EdgeId> {
    let network = belief.network();
    let mut best: Option<(EdgeId, f64)> = None;
    for edge in path.edges(network) {
        if belief.status(edge) != EdgeStatus::Uninspected {
            continue;
        }
        let p = belief.probability(edge);
        match best {
            Some((_, current)) if p >= current => {}
            _ => best = Some((edge, p)),
        }
    }
    best.map(|(e, _)| e)
}
