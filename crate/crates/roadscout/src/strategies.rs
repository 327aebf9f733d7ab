//! The pluggable planning interface and the seven concrete strategies that
//! assign the ground vehicle's route and the aerial vehicles' inspection
//! edges at every event.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::criticality::{most_critical_uninspected, CriticalityTable, WalkWeighting};
use crate::engine::{GroundTruth, UavState, UgvState};
use crate::mpsp::{least_probable_uninspected, mpsp_path};
use crate::road_graph::{
    BeliefGraph, EdgeId, EdgeStatus, Path, RoadNetwork, VertexId,
};

/// Snapshot handed to a strategy at each replanning event.
pub struct PlanningContext<'a> {
    pub belief: &'a BeliefGraph,
    pub ugv: &'a UgvState,
    pub uavs: &'a [UavState],
    pub destination: VertexId,
}

/// One round of planning output: the ground route plus per-UAV inspection
/// edges given as (entry, exit) vertex pairs. No edge appears twice.
#[derive(Debug, Clone, Default)]
pub struct PlanAssignment {
    pub ugv_plan: Option<Path>,
    pub uav_assignments: Vec<Option<(VertexId, VertexId)>>,
}

impl PlanAssignment {
    fn ugv_only(plan: Option<Path>) -> Self {
        PlanAssignment {
            ugv_plan: plan,
            uav_assignments: Vec::new(),
        }
    }
}

pub trait Strategy {
    /// Number of aerial vehicles this strategy commands.
    fn uav_count(&self) -> usize;

    fn find_path(&mut self, ctx: &PlanningContext) -> PlanAssignment;
}

/// Strategy selector with per-strategy parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyKind {
    PerfectKnowledge,
    UgvOnly,
    Kemeny,
    KShortestPaths { k: usize },
    Mpsp { m: usize, trials: usize },
    Bidirectional,
    MultiUavBidirectional { k_uavs: usize },
}

impl StrategyKind {
    pub fn uav_count(&self) -> usize {
        match self {
            StrategyKind::PerfectKnowledge | StrategyKind::UgvOnly => 0,
            StrategyKind::Kemeny
            | StrategyKind::KShortestPaths { .. }
            | StrategyKind::Mpsp { .. }
            | StrategyKind::Bidirectional => 1,
            StrategyKind::MultiUavBidirectional { k_uavs } => *k_uavs,
        }
    }

    /// Builds a ready-to-run strategy instance. `truth` feeds only the
    /// perfect-knowledge baseline; `seed` only the Monte Carlo planner;
    /// `criticality` lets callers reuse a precomputed table (it is computed
    /// here otherwise).
    pub fn instantiate(
        &self,
        network: &RoadNetwork,
        truth: &GroundTruth,
        seed: u64,
        criticality: Option<CriticalityTable>,
    ) -> Box<dyn Strategy> {
        match self {
            StrategyKind::PerfectKnowledge => Box::new(PerfectKnowledge {
                truth: truth.clone(),
            }),
            StrategyKind::UgvOnly => Box::new(UgvOnly),
            StrategyKind::Kemeny => {
                let table = criticality.unwrap_or_else(|| {
                    CriticalityTable::build(network, WalkWeighting::Uniform)
                });
                Box::new(KemenyStrategy { table })
            }
            StrategyKind::KShortestPaths { k } => {
                assert!(*k >= 2);
                Box::new(KShortestStrategy { k: *k })
            }
            StrategyKind::Mpsp { m, trials } => Box::new(MpspStrategy {
                m: *m,
                trials: *trials,
                rng: ChaCha8Rng::seed_from_u64(seed),
            }),
            StrategyKind::Bidirectional => Box::new(Bidirectional),
            StrategyKind::MultiUavBidirectional { k_uavs } => {
                assert!(*k_uavs >= 1);
                Box::new(MultiUavBidirectional { k_uavs: *k_uavs })
            }
        }
    }
}

/// Entry endpoint for an inspection: the endpoint nearer the vehicle by
/// straight-line distance, lower-id endpoint on an exact tie.
fn nearer_entry(network: &RoadNetwork, uav: &UavState, edge: EdgeId) -> (VertexId, VertexId) {
    let e = network.edge(edge);
    let at = uav.euclidean_point(network);
    let du = at.distance(&network.point(e.u));
    let dv = at.distance(&network.point(e.v));
    if dv < du {
        (e.v, e.u)
    } else {
        (e.u, e.v)
    }
}

/// Lower bound: plans once over the true passable subgraph, so the ground
/// vehicle never encounters a surprise. Uses no aerial vehicles.
pub struct PerfectKnowledge {
    pub truth: GroundTruth,
}

impl Strategy for PerfectKnowledge {
    fn uav_count(&self) -> usize {
        0
    }

    fn find_path(&mut self, ctx: &PlanningContext) -> PlanAssignment {
        let plan = ctx.belief.shortest_path_filtered(ctx.ugv.position, ctx.destination, |e| {
            !self.truth.is_damaged(e)
        });
        PlanAssignment::ugv_only(plan)
    }
}

/// Baseline: always the shortest path in the current belief, no inspection.
pub struct UgvOnly;

impl Strategy for UgvOnly {
    fn uav_count(&self) -> usize {
        0
    }

    fn find_path(&mut self, ctx: &PlanningContext) -> PlanAssignment {
        PlanAssignment::ugv_only(ctx.belief.shortest_path(ctx.ugv.position, ctx.destination))
    }
}

/// The aerial vehicle inspects the highest-criticality uninspected edge on
/// the ground route (first such edge in path order on ties).
pub struct KemenyStrategy {
    pub table: CriticalityTable,
}

impl Strategy for KemenyStrategy {
    fn uav_count(&self) -> usize {
        1
    }

    fn find_path(&mut self, ctx: &PlanningContext) -> PlanAssignment {
        let plan = ctx.belief.shortest_path(ctx.ugv.position, ctx.destination);
        let uav = plan.as_ref().and_then(|p| {
            most_critical_uninspected(&self.table, p, ctx.belief)
                .map(|e| nearer_entry(ctx.belief.network(), &ctx.uavs[0], e))
        });
        PlanAssignment {
            ugv_plan: plan,
            uav_assignments: vec![uav],
        }
    }
}

/// The aerial vehicle inspects the uninspected ground-route edge that
/// recurs most often among the k shortest paths (first along the route on
/// ties).
pub struct KShortestStrategy {
    pub k: usize,
}

impl Strategy for KShortestStrategy {
    fn uav_count(&self) -> usize {
        1
    }

    fn find_path(&mut self, ctx: &PlanningContext) -> PlanAssignment {
        let network = ctx.belief.network().clone();
        let plan = ctx.belief.shortest_path(ctx.ugv.position, ctx.destination);
        let uav = plan.as_ref().and_then(|p| {
            let alternatives = ctx
                .belief
                .k_shortest_paths(p.start(), ctx.destination, self.k);
            let mut counts = std::collections::HashMap::new();
            for alt in &alternatives {
                for e in alt.edges(&network) {
                    *counts.entry(e).or_insert(0usize) += 1;
                }
            }
            let mut best: Option<(EdgeId, usize)> = None;
            for e in p.edges(&network) {
                if ctx.belief.status(e) != EdgeStatus::Uninspected {
                    continue;
                }
                let count = counts.get(&e).copied().unwrap_or(0);
                match best {
                    Some((_, top)) if count <= top => {}
                    _ => best = Some((e, count)),
                }
            }
            best.map(|(e, _)| nearer_entry(&network, &ctx.uavs[0], e))
        });
        PlanAssignment {
            ugv_plan: plan,
            uav_assignments: vec![uav],
        }
    }
}

/// The ground vehicle follows the most probable shortest path; the aerial
/// vehicle inspects that route's least probable uninspected edge.
pub struct MpspStrategy {
    pub m: usize,
    pub trials: usize,
    pub rng: ChaCha8Rng,
}

impl Strategy for MpspStrategy {
    fn uav_count(&self) -> usize {
        1
    }

    fn find_path(&mut self, ctx: &PlanningContext) -> PlanAssignment {
        let result = mpsp_path(
            ctx.belief,
            ctx.ugv.position,
            ctx.destination,
            self.m,
            self.trials,
            &mut self.rng,
        );
        let plan = result.map(|(p, _)| p);
        let uav = plan.as_ref().and_then(|p| {
            least_probable_uninspected(p, ctx.belief)
                .map(|e| nearer_entry(ctx.belief.network(), &ctx.uavs[0], e))
        });
        PlanAssignment {
            ugv_plan: plan,
            uav_assignments: vec![uav],
        }
    }
}

/// Scans the reversed ground route from the destination side for the first
/// uninspected edge; the aerial vehicle enters from the destination-facing
/// endpoint.
fn reversed_scan(
    belief: &BeliefGraph,
    path: &Path,
    allocated: &mut Vec<EdgeId>,
) -> Option<(VertexId, VertexId)> {
    let network = belief.network();
    for i in (1..path.vertices.len()).rev() {
        let (prev, here) = (path.vertices[i - 1], path.vertices[i]);
        let edge = network.edge_between(prev, here).unwrap();
        if belief.status(edge) == EdgeStatus::Uninspected && !allocated.contains(&edge) {
            allocated.push(edge);
            return Some((here, prev));
        }
    }
    None
}

/// The aerial vehicle inspects the ground route's edges in reverse order
/// from the destination.
pub struct Bidirectional;

impl Strategy for Bidirectional {
    fn uav_count(&self) -> usize {
        1
    }

    fn find_path(&mut self, ctx: &PlanningContext) -> PlanAssignment {
        let plan = ctx.belief.shortest_path(ctx.ugv.position, ctx.destination);
        let mut allocated = Vec::new();
        let uav = plan
            .as_ref()
            .and_then(|p| reversed_scan(ctx.belief, p, &mut allocated));
        PlanAssignment {
            ugv_plan: plan,
            uav_assignments: vec![uav],
        }
    }
}

/// Generalizes the reversed-scan rule across the k shortest paths: vehicle
/// j starts from path j (clamped to the last available path) and falls
/// through to later paths until it finds an unallocated uninspected edge;
/// leftovers idle. No edge is assigned twice.
pub struct MultiUavBidirectional {
    pub k_uavs: usize,
}

impl Strategy for MultiUavBidirectional {
    fn uav_count(&self) -> usize {
        self.k_uavs
    }

    fn find_path(&mut self, ctx: &PlanningContext) -> PlanAssignment {
        let plan = ctx.belief.shortest_path(ctx.ugv.position, ctx.destination);
        let mut assignments = vec![None; self.k_uavs];
        if let Some(p) = &plan {
            let mut paths = ctx
                .belief
                .k_shortest_paths(p.start(), ctx.destination, self.k_uavs);
            // The ground plan is always the first candidate route. Anchoring
            // the alternatives at the plan's entry vertex almost always
            // reproduces the plan as the best path, but a mid-edge vehicle
            // plans with entry access costs the anchored query cannot see,
            // which can tip an exact tie the other way.
            if paths.first().map(|q| &q.vertices) != Some(&p.vertices) {
                paths.retain(|q| q.vertices != p.vertices);
                paths.insert(0, p.clone());
                paths.truncate(self.k_uavs.max(1));
            }
            let mut allocated = Vec::new();
            for (j, slot) in assignments.iter_mut().enumerate() {
                let start = j.min(paths.len() - 1);
                for path in &paths[start..] {
                    if let Some(pair) = reversed_scan(ctx.belief, path, &mut allocated) {
                        *slot = Some(pair);
                        break;
                    }
                }
            }
        }
        PlanAssignment {
            ugv_plan: plan,
            uav_assignments: assignments,
        }
    }
}
