//! Independent test oracles: exhaustive path enumeration, an eigenvalue
//! route to the Kemeny constant, brute-force world enumeration for
//! shortest-path probabilities, and a time-stepped reference simulator.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use roadscout::engine::{EventKind, EventRecord, GroundTruth, RunSetup, UavPosition, UavState, UgvState};
use roadscout::road_graph::{
    BeliefGraph, EdgeId, EdgeStatus, GraphPosition, Path, Point2D, RoadNetwork, VertexId,
};
use roadscout::strategies::{PlanningContext, Strategy};

pub fn cmp_paths(a: &Path, b: &Path) -> Ordering {
    a.total_length
        .partial_cmp(&b.total_length)
        .unwrap()
        .then_with(|| a.vertices.cmp(&b.vertices))
}

/// Every simple path between two vertices over admitted edges, by
/// depth-first enumeration. Lengths are accumulated the same way the
/// library does (sequential summation), so comparisons are bit-exact.
pub fn all_simple_paths(
    network: &RoadNetwork,
    from: VertexId,
    to: VertexId,
    allow: impl Fn(EdgeId) -> bool + Copy,
) -> Vec<Path> {
    let mut found = Vec::new();
    let mut visited = vec![false; network.vertex_count()];
    let mut trail = vec![from];
    visited[from.index()] = true;
    dfs(network, to, allow, &mut visited, &mut trail, &mut found);
    found
}

fn dfs(
    network: &RoadNetwork,
    to: VertexId,
    allow: impl Fn(EdgeId) -> bool + Copy,
    visited: &mut Vec<bool>,
    trail: &mut Vec<VertexId>,
    found: &mut Vec<Path>,
) {
    let here = *trail.last().unwrap();
    if here == to {
        found.push(Path::from_vertices(network, trail.clone()));
        return;
    }
    for &(next, edge) in network.neighbors(here) {
        if visited[next.index()] || !allow(edge) {
            continue;
        }
        visited[next.index()] = true;
        trail.push(next);
        dfs(network, to, allow, visited, trail, found);
        trail.pop();
        visited[next.index()] = false;
    }
}

/// Minimum path under the (length, lexicographic sequence) order.
pub fn oracle_shortest(
    network: &RoadNetwork,
    from: VertexId,
    to: VertexId,
    allow: impl Fn(EdgeId) -> bool + Copy,
) -> Option<Path> {
    all_simple_paths(network, from, to, allow)
        .into_iter()
        .min_by(cmp_paths)
}

/// First k paths under the same order.
pub fn oracle_k_shortest(
    network: &RoadNetwork,
    from: VertexId,
    to: VertexId,
    k: usize,
    allow: impl Fn(EdgeId) -> bool + Copy,
) -> Vec<Path> {
    let mut paths = all_simple_paths(network, from, to, allow);
    paths.sort_by(cmp_paths);
    paths.truncate(k);
    paths
}

/// Random connected embedded network with `3..=max_vertices` vertices.
/// Integer edge lengths at or above the chord make length ties common,
/// which is exactly what the deterministic tie-break rules must survive.
pub fn random_network(rng: &mut ChaCha8Rng, max_vertices: usize) -> RoadNetwork {
    loop {
        let n = rng.gen_range(3..=max_vertices);
        // Distinct grid positions.
        let mut cells: Vec<(u32, u32)> = (0..11u32)
            .flat_map(|x| (0..11u32).map(move |y| (x, y)))
            .collect();
        for i in (1..cells.len()).rev() {
            cells.swap(i, rng.gen_range(0..=i));
        }
        let points: Vec<Point2D> = cells[..n]
            .iter()
            .map(|&(x, y)| Point2D::new(x as f64, y as f64))
            .collect();
        let mut edges = Vec::new();
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                if rng.gen_bool(0.45) {
                    let chord = points[i as usize].distance(&points[j as usize]);
                    let length = chord.ceil().max(1.0) + rng.gen_range(0..3) as f64;
                    edges.push((i, j, length));
                }
            }
        }
        if let Ok(net) = RoadNetwork::new(points, edges) {
            return net;
        }
    }
}

/// Kemeny constant via the spectrum of the symmetrized walk matrix:
/// K = sum over eigenvalues lambda != 1 of 1 / (1 - lambda).
pub fn kemeny_eigenvalue_oracle(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    let mut w = DMatrix::<f64>::zeros(n, n);
    let mut degree = vec![0.0f64; n];
    for &(a, b, _) in edges {
        w[(a, b)] += 1.0;
        w[(b, a)] += 1.0;
        degree[a] += 1.0;
        degree[b] += 1.0;
    }
    let mut s = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = w[(i, j)] / (degree[i] * degree[j]).sqrt();
        }
    }
    let eigen = s.symmetric_eigen();
    let mut k = 0.0;
    let mut skipped_unit = false;
    let mut eigenvalues: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for lambda in eigenvalues {
        if !skipped_unit && (lambda - 1.0).abs() < 1e-9 {
            skipped_unit = true;
            continue;
        }
        k += 1.0 / (1.0 - lambda);
    }
    assert!(skipped_unit, "stochastic matrix must have a unit eigenvalue");
    k
}

/// Exact Pr[candidate j present and no earlier candidate fully present],
/// by enumerating presence of every edge that appears in the candidate set.
pub fn exact_sp_probabilities(
    belief: &BeliefGraph,
    candidates: &[Path],
    occupied: Option<EdgeId>,
) -> Vec<f64> {
    let network = belief.network();
    let edge_sets: Vec<Vec<EdgeId>> = candidates
        .iter()
        .map(|p| p.edges(network).collect())
        .collect();
    let mut relevant: Vec<EdgeId> = Vec::new();
    for set in &edge_sets {
        for &e in set {
            if !relevant.contains(&e) {
                relevant.push(e);
            }
        }
    }
    assert!(relevant.len() <= 20, "world enumeration oracle limit");
    let p_of = |e: EdgeId| {
        if occupied == Some(e) {
            1.0
        } else {
            belief.probability(e)
        }
    };
    let mut result = vec![0.0f64; candidates.len()];
    for world in 0u64..(1 << relevant.len()) {
        let present = |e: EdgeId| {
            let slot = relevant.iter().position(|&r| r == e).unwrap();
            world >> slot & 1 == 1
        };
        let mut weight = 1.0;
        for (slot, &e) in relevant.iter().enumerate() {
            let p = p_of(e);
            weight *= if world >> slot & 1 == 1 { p } else { 1.0 - p };
        }
        if weight == 0.0 {
            continue;
        }
        if let Some(first) = edge_sets
            .iter()
            .position(|set| set.iter().all(|&e| present(e)))
        {
            result[first] += weight;
        }
    }
    result
}

/// Result of a stepped reference run.
#[derive(Debug)]
pub struct OracleOutcome {
    pub travel_time: f64,
    pub reached: bool,
    pub events: Vec<EventRecord>,
    pub odometer: f64,
}

#[derive(Clone)]
struct OracleUgv {
    position: GraphPosition,
    last_vertex: VertexId,
    /// Remaining plan vertices to visit, front first.
    route: VecDeque<VertexId>,
    odometer: f64,
    stop: Option<EventKind>,
}

#[derive(Clone)]
struct OracleUav {
    point: Point2D,
    /// Active inspection task for this interval.
    task: Option<UavTask>,
    stop: Option<EventKind>,
}

#[derive(Clone)]
struct UavTask {
    edge: EdgeId,
    entry: VertexId,
    deadhead_from: Point2D,
    deadhead_total: f64,
    deadhead_done: f64,
    inspected: f64,
}

/// Time-stepped reference simulator: every vehicle advances `dt` of
/// simulated time per tick; when a tick crosses some vehicle's stopping
/// condition, the tick is replayed from a snapshot with a bisected step
/// until the stop instant is pinned down to machine precision. The
/// bisection keeps every vehicle exactly on the shared clock, so stops
/// that genuinely coincide (symmetric geometry produces many) fire in the
/// same interval instead of being split by per-vehicle rounding. Shares
/// only the strategy objects and graph types with the event engine — all
/// motion, damage detection, and bookkeeping are reimplemented here.
pub fn run_stepped(
    network: &Arc<RoadNetwork>,
    truth: &GroundTruth,
    strategy: &mut dyn Strategy,
    setup: &RunSetup,
    dt: f64,
) -> OracleOutcome {
    let mut belief = BeliefGraph::new(network.clone(), setup.edge_probabilities.clone());
    let mut ugv = OracleUgv {
        position: GraphPosition::AtVertex(setup.ugv_start),
        last_vertex: setup.ugv_start,
        route: VecDeque::new(),
        odometer: 0.0,
        stop: None,
    };
    let mut uavs: Vec<OracleUav> = (0..strategy.uav_count())
        .map(|_| OracleUav {
            point: network.point(setup.uav_start),
            task: None,
            stop: None,
        })
        .collect();
    let mut events = Vec::new();
    let mut ticks: u64 = 0;
    let mut now = 0.0f64;
    let mut reached = false;

    'outer: for _ in 0..(4 * network.edge_count() + 16) {
        // Replan: mirror the engine's context using equivalent state.
        let assignment = {
            let ugv_state = UgvState {
                position: ugv.position,
                speed: setup.ugv_speed,
                plan: None,
                last_vertex: ugv.last_vertex,
                odometer: ugv.odometer,
            };
            let uav_states: Vec<UavState> = uavs
                .iter()
                .map(|u| UavState {
                    position: UavPosition::Free(u.point),
                    speed: setup.uav_speed,
                    assignment: None,
                })
                .collect();
            let ctx = PlanningContext {
                belief: &belief,
                ugv: &ugv_state,
                uavs: &uav_states,
                destination: setup.destination,
            };
            strategy.find_path(&ctx)
        };

        let no_plan = assignment.ugv_plan.is_none();
        ugv.route = match &assignment.ugv_plan {
            Some(plan) => plan.vertices.iter().copied().collect(),
            // No viable plan: a mid-edge vehicle still returns to its last
            // vertex before the run ends.
            None => match ugv.position {
                GraphPosition::OnEdge { .. } => [ugv.last_vertex].into_iter().collect(),
                GraphPosition::AtVertex(_) => VecDeque::new(),
            },
        };
        match ugv.position {
            GraphPosition::AtVertex(v) => {
                if ugv.route.front() == Some(&v) {
                    ugv.route.pop_front();
                }
            }
            // A mid-edge vehicle re-aims at the new plan's entry endpoint.
            GraphPosition::OnEdge { edge, fraction, .. } => {
                if let Some(&first) = ugv.route.front() {
                    assert!(network.edge(edge).touches(first));
                    ugv.position = GraphPosition::OnEdge {
                        edge,
                        fraction,
                        heading: first,
                    };
                }
            }
        }
        if no_plan && ugv.route.is_empty() {
            events.push(EventRecord {
                time: now,
                kind: EventKind::NoPath,
            });
            break 'outer;
        }

        for (uav, slot) in uavs.iter_mut().zip(
            assignment
                .uav_assignments
                .iter()
                .copied()
                .chain(std::iter::repeat(None)),
        ) {
            uav.task = slot.map(|(entry, exit)| {
                let edge = network.edge_between(entry, exit).unwrap();
                let target = network.point(entry);
                UavTask {
                    edge,
                    entry,
                    deadhead_from: uav.point,
                    deadhead_total: uav.point.distance(&target),
                    deadhead_done: 0.0,
                    inspected: 0.0,
                }
            });
            uav.stop = None;
        }
        ugv.stop = None;

        // Step until something stops, then pin the stop instant down by
        // bisecting the final tick from a snapshot.
        loop {
            ticks += 1;
            let snapshot = (ugv.clone(), uavs.clone(), belief.clone());
            let mut step_all = |ugv: &mut OracleUgv,
                                uavs: &mut Vec<OracleUav>,
                                belief: &mut BeliefGraph,
                                h: f64| {
                step_ugv(
                    ugv,
                    network,
                    belief,
                    truth,
                    setup.ugv_speed * h,
                    setup.destination,
                    no_plan,
                );
                for uav in uavs.iter_mut() {
                    step_uav(uav, network, belief, truth, setup.uav_speed * h);
                }
                ugv.stop.is_some() || uavs.iter().any(|u| u.stop.is_some())
            };
            if step_all(&mut ugv, &mut uavs, &mut belief, dt) {
                let mut lo = 0.0f64;
                let mut hi = dt;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    ugv = snapshot.0.clone();
                    uavs = snapshot.1.clone();
                    belief = snapshot.2.clone();
                    if step_all(&mut ugv, &mut uavs, &mut belief, mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                ugv = snapshot.0.clone();
                uavs = snapshot.1.clone();
                belief = snapshot.2.clone();
                let fired = step_all(&mut ugv, &mut uavs, &mut belief, hi);
                assert!(fired, "bisection lost the stop");
                // Grace probe: vehicles whose stop lies within the
                // coincidence slack of this instant fire in the same batch.
                // The probe is detection-only — vehicles that do not fire
                // are restored, so probing never moves anyone off the
                // shared clock.
                let pre = (ugv.clone(), uavs.clone(), belief.clone());
                step_all(&mut ugv, &mut uavs, &mut belief, 2e-9);
                if ugv.stop == pre.0.stop {
                    ugv = pre.0;
                    belief = pre.2;
                }
                for (uav, before) in uavs.iter_mut().zip(pre.1) {
                    if uav.stop == before.stop {
                        *uav = before;
                    }
                }
                now += hi;
                break;
            }
            now += dt;
            assert!(
                ticks < 500_000_000,
                "stepped oracle exceeded its tick budget"
            );
        }

        // Apply coincident stops: ground vehicle first, then by index.
        if let Some(kind) = ugv.stop.take() {
            match &kind {
                EventKind::UgvReachedDestination => {
                    reached = true;
                    events.push(EventRecord { time: now, kind });
                }
                EventKind::UgvHitDamage { edge, fraction } => {
                    belief.mark_damaged(*edge).unwrap();
                    ugv.position = GraphPosition::OnEdge {
                        edge: *edge,
                        fraction: *fraction,
                        heading: ugv.last_vertex,
                    };
                    events.push(EventRecord { time: now, kind });
                }
                EventKind::NoPath => {
                    events.push(EventRecord { time: now, kind });
                    break 'outer;
                }
                _ => unreachable!(),
            }
        }
        for (i, uav) in uavs.iter_mut().enumerate() {
            let Some(kind) = uav.stop.take() else { continue };
            match kind {
                EventKind::UavInspectionComplete { edge, .. } => {
                    if belief.status(edge) == EdgeStatus::Uninspected {
                        belief.mark_safe(edge).unwrap();
                    }
                    events.push(EventRecord {
                        time: now,
                        kind: EventKind::UavInspectionComplete { uav: i, edge },
                    });
                }
                EventKind::UavHitDamage { edge, fraction, .. } => {
                    if belief.status(edge) == EdgeStatus::Uninspected {
                        belief.mark_damaged(edge).unwrap();
                        events.push(EventRecord {
                            time: now,
                            kind: EventKind::UavHitDamage { uav: i, edge, fraction },
                        });
                    }
                }
                _ => unreachable!(),
            }
        }
        if let GraphPosition::OnEdge { edge, fraction, .. } = ugv.position {
            if belief.status(edge) == EdgeStatus::Damaged {
                ugv.position = GraphPosition::OnEdge {
                    edge,
                    fraction,
                    heading: ugv.last_vertex,
                };
            }
        }
        if reached {
            break;
        }
    }

    OracleOutcome {
        travel_time: now,
        reached,
        events,
        odometer: ugv.odometer,
    }
}

/// Advances the ground vehicle by `d` meters along its route, clamping at
/// undiscovered damage points, the destination, or (in the no-plan case)
/// the return vertex.
fn step_ugv(
    ugv: &mut OracleUgv,
    network: &RoadNetwork,
    belief: &mut BeliefGraph,
    truth: &GroundTruth,
    mut d: f64,
    destination: VertexId,
    no_plan: bool,
) {
    if ugv.stop.is_some() {
        return;
    }
    while d > 1e-15 {
        match ugv.position {
            GraphPosition::AtVertex(v) => {
                let Some(&toward) = ugv.route.front() else {
                    if no_plan {
                        ugv.stop = Some(EventKind::NoPath);
                    } else {
                        assert_eq!(v, destination);
                        ugv.stop = Some(EventKind::UgvReachedDestination);
                    }
                    return;
                };
                let edge = network.edge_between(v, toward).unwrap();
                let e = network.edge(edge);
                ugv.position = GraphPosition::OnEdge {
                    edge,
                    fraction: if v == e.u { 0.0 } else { 1.0 },
                    heading: toward,
                };
            }
            GraphPosition::OnEdge {
                edge,
                fraction,
                heading,
            } => {
                let e = network.edge(edge);
                let len = e.length;
                let target_frac = if heading == e.v { 1.0 } else { 0.0 };
                let dist_target = (target_frac - fraction).abs() * len;
                if belief.status(edge) != EdgeStatus::Damaged {
                    if let Some(df) = truth.damage_fraction(edge) {
                        let ahead = if target_frac > fraction {
                            df > fraction && df <= target_frac
                        } else {
                            df < fraction && df >= target_frac
                        };
                        if ahead {
                            let dist_damage = (df - fraction).abs() * len;
                            if dist_damage <= d {
                                ugv.odometer += dist_damage;
                                ugv.position = GraphPosition::OnEdge {
                                    edge,
                                    fraction: df,
                                    heading,
                                };
                                ugv.stop = Some(EventKind::UgvHitDamage {
                                    edge,
                                    fraction: df,
                                });
                                return;
                            }
                        }
                    }
                }
                if dist_target <= d {
                    d -= dist_target;
                    ugv.odometer += dist_target;
                    // A full traversal is complete coverage: either the
                    // vehicle crossed from endpoint to endpoint, or it
                    // continued past its damage-free entry side's
                    // remainder after a mid-edge replan.
                    let full = heading != ugv.last_vertex;
                    ugv.position = GraphPosition::AtVertex(heading);
                    ugv.last_vertex = heading;
                    if ugv.route.front() == Some(&heading) {
                        ugv.route.pop_front();
                    }
                    if full && belief.status(edge) == EdgeStatus::Uninspected {
                        belief.mark_safe(edge).unwrap();
                    }
                } else {
                    let delta = d / len;
                    ugv.odometer += d;
                    ugv.position = GraphPosition::OnEdge {
                        edge,
                        fraction: if target_frac > fraction {
                            fraction + delta
                        } else {
                            fraction - delta
                        },
                        heading,
                    };
                    return;
                }
            }
        }
    }
}

/// Advances one aerial vehicle by `d` meters: finish the straight-line
/// deadhead first, then sweep the assigned edge from its entry endpoint.
fn step_uav(
    uav: &mut OracleUav,
    network: &RoadNetwork,
    belief: &BeliefGraph,
    truth: &GroundTruth,
    mut d: f64,
) {
    if uav.stop.is_some() {
        return;
    }
    let Some(task) = uav.task.as_mut() else { return };
    if task.deadhead_done < task.deadhead_total {
        let step = d.min(task.deadhead_total - task.deadhead_done);
        task.deadhead_done += step;
        d -= step;
        let t = task.deadhead_done / task.deadhead_total;
        let target = network.point(task.entry);
        uav.point = Point2D::new(
            task.deadhead_from.x + t * (target.x - task.deadhead_from.x),
            task.deadhead_from.y + t * (target.y - task.deadhead_from.y),
        );
        if d <= 0.0 {
            return;
        }
    }
    let e = network.edge(task.edge);
    let len = e.length;
    task.inspected += d;
    let damage_dist = match truth.damage_fraction(task.edge) {
        Some(df) if belief.status(task.edge) != EdgeStatus::Damaged => Some(if task.entry == e.u {
            df * len
        } else {
            (1.0 - df) * len
        }),
        _ => None,
    };
    let place = |dist_from_entry: f64| {
        let frac = if task.entry == e.u {
            dist_from_entry / len
        } else {
            1.0 - dist_from_entry / len
        };
        network.euclidean_point(GraphPosition::OnEdge {
            edge: task.edge,
            fraction: frac,
            heading: e.v,
        })
    };
    match damage_dist {
        Some(stop_at) if task.inspected >= stop_at => {
            uav.point = place(stop_at);
            uav.stop = Some(EventKind::UavHitDamage {
                uav: 0,
                edge: task.edge,
                fraction: truth.damage_fraction(task.edge).unwrap(),
            });
            uav.task = None;
        }
        _ if task.inspected >= len => {
            uav.point = network.point(e.other(task.entry));
            uav.stop = Some(EventKind::UavInspectionComplete {
                uav: 0,
                edge: task.edge,
            });
            uav.task = None;
        }
        _ => {
            uav.point = place(task.inspected);
        }
    }
}
