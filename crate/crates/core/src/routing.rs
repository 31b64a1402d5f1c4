//! Shortest-path engines over the edge graph.
//!
//! Routing works on edges: a path is an ordered edge list, and two edges are
//! adjacent when a movement connects them. Path cost is the sum of the edge
//! costs of every edge except the final destination edge, matching the
//! cost-to-go convention where `w` at the destination is zero.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{EdgeIdx, NetworkModel};

/// Stand-in for unreachable; kept finite so downstream arithmetic stays
/// well-defined (ratios against it converge to their limits).
pub const UNREACHABLE_COST: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoutingAlgo {
    Dijkstra,
    Astar,
    Greedy,
}

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("no path from {from} to {to}")]
    NoPath { from: String, to: String },
}

/// Per-edge estimated travel times at one instant.
#[derive(Clone, Debug)]
pub struct EdgeCostField {
    pub timestamp_s: f64,
    costs: Vec<f64>,
}

impl EdgeCostField {
    pub fn new(timestamp_s: f64, costs: Vec<f64>) -> Self {
        debug_assert!(costs.iter().all(|c| c.is_finite() && *c >= 0.0));
        EdgeCostField { timestamp_s, costs }
    }

    /// Uniform free-flow costs for the whole network.
    pub fn free_flow(net: &NetworkModel) -> Self {
        EdgeCostField {
            timestamp_s: 0.0,
            costs: net.edges.iter().map(|e| e.free_flow_time()).collect(),
        }
    }

    pub fn cost(&self, edge: EdgeIdx) -> f64 {
        self.costs[edge.usize()]
    }

    pub fn set_cost(&mut self, edge: EdgeIdx, cost: f64) {
        self.costs[edge.usize()] = cost;
    }
}

/// Minimum expected cost to reach a destination edge from every edge.
///
/// `value(e)` includes the cost of traversing `e` itself plus the optimal
/// remainder; the destination itself has value 0.
#[derive(Clone, Debug)]
pub struct CostToGo {
    pub destination: EdgeIdx,
    values: Vec<f64>,
}

impl CostToGo {
    pub fn value(&self, edge: EdgeIdx) -> f64 {
        self.values[edge.usize()]
    }

    pub fn reachable(&self, edge: EdgeIdx) -> bool {
        self.values[edge.usize()] < UNREACHABLE_COST
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    priority: f64,
    edge: EdgeIdx,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (priority, edge id) for deterministic tie-breaking.
        other
            .priority
            .partial_cmp(&self.priority)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.edge.cmp(&self.edge))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Backward Dijkstra from `destination` over the reversed edge graph.
pub fn cost_to_go(net: &NetworkModel, costs: &EdgeCostField, destination: EdgeIdx) -> CostToGo {
    let mut values = vec![UNREACHABLE_COST; net.edges.len()];
    let mut settled = vec![false; net.edges.len()];
    let mut heap = BinaryHeap::new();
    values[destination.usize()] = 0.0;
    heap.push(HeapEntry {
        priority: 0.0,
        edge: destination,
    });
    while let Some(HeapEntry { priority, edge }) = heap.pop() {
        if settled[edge.usize()] {
            continue;
        }
        settled[edge.usize()] = true;
        for &pred in net.predecessors(edge) {
            if settled[pred.usize()] {
                continue;
            }
            let candidate = costs.cost(pred) + priority;
            if candidate < values[pred.usize()] {
                values[pred.usize()] = candidate;
                heap.push(HeapEntry {
                    priority: candidate,
                    edge: pred,
                });
            }
        }
    }
    CostToGo {
        destination,
        values,
    }
}

/// Shortest path from `origin` to `destination` (both included in the
/// returned list) under the given algorithm.
pub fn shortest_path(
    net: &NetworkModel,
    costs: &EdgeCostField,
    origin: EdgeIdx,
    destination: EdgeIdx,
    algo: RoutingAlgo,
) -> Result<Vec<EdgeIdx>, RoutingError> {
    match algo {
        RoutingAlgo::Dijkstra => best_first(net, costs, origin, destination, false),
        RoutingAlgo::Astar => best_first(net, costs, origin, destination, true),
        RoutingAlgo::Greedy => greedy_path(net, costs, origin, destination),
    }
}

/// Cost of a path under the destination-excluded convention.
pub fn path_cost(costs: &EdgeCostField, path: &[EdgeIdx]) -> f64 {
    path.iter()
        .take(path.len().saturating_sub(1))
        .map(|&e| costs.cost(e))
        .sum()
}

/// Euclidean lower bound on the travel time from the start of `from` to the
/// start of `to`, at the network-wide maximum speed. Admissible and
/// consistent as long as edge costs respect the free-flow lower bound.
fn straight_line_time(net: &NetworkModel, from: EdgeIdx, to: EdgeIdx) -> f64 {
    let a = net.node(net.edge(from).from);
    let b = net.node(net.edge(to).from);
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt() / net.max_speed_limit()
}

fn best_first(
    net: &NetworkModel,
    costs: &EdgeCostField,
    origin: EdgeIdx,
    destination: EdgeIdx,
    use_heuristic: bool,
) -> Result<Vec<EdgeIdx>, RoutingError> {
    if origin == destination {
        return Ok(vec![origin]);
    }
    let mut dist = vec![f64::INFINITY; net.edges.len()];
    let mut parent: Vec<Option<EdgeIdx>> = vec![None; net.edges.len()];
    let mut settled = vec![false; net.edges.len()];
    let mut heap = BinaryHeap::new();
    dist[origin.usize()] = 0.0;
    let h0 = if use_heuristic {
        straight_line_time(net, origin, destination)
    } else {
        0.0
    };
    heap.push(HeapEntry {
        priority: h0,
        edge: origin,
    });
    while let Some(HeapEntry { edge, .. }) = heap.pop() {
        if settled[edge.usize()] {
            continue;
        }
        settled[edge.usize()] = true;
        if edge == destination {
            let mut path = vec![destination];
            let mut cur = destination;
            while let Some(p) = parent[cur.usize()] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Ok(path);
        }
        let step = costs.cost(edge);
        for &next in net.successors(edge) {
            if settled[next.usize()] {
                continue;
            }
            let g = dist[edge.usize()] + step;
            if g < dist[next.usize()] {
                dist[next.usize()] = g;
                parent[next.usize()] = Some(edge);
                let h = if use_heuristic {
                    straight_line_time(net, next, destination)
                } else {
                    0.0
                };
                heap.push(HeapEntry {
                    priority: g + h,
                    edge: next,
                });
            }
        }
    }
    Err(RoutingError::NoPath {
        from: net.edge(origin).id.clone(),
        to: net.edge(destination).id.clone(),
    })
}

/// Depth-first walk that always advances to the unvisited successor with the
/// lowest (edge cost + straight-line time), backtracking out of dead ends.
/// Ties break on the lower edge id.
fn greedy_path(
    net: &NetworkModel,
    costs: &EdgeCostField,
    origin: EdgeIdx,
    destination: EdgeIdx,
) -> Result<Vec<EdgeIdx>, RoutingError> {
    if origin == destination {
        return Ok(vec![origin]);
    }
    let mut visited = vec![false; net.edges.len()];
    let mut path = vec![origin];
    visited[origin.usize()] = true;
    loop {
        let current = *path.last().unwrap();
        if current == destination {
            return Ok(path);
        }
        let mut best: Option<(f64, EdgeIdx)> = None;
        for &next in net.successors(current) {
            if visited[next.usize()] {
                continue;
            }
            let score = costs.cost(next) + straight_line_time(net, next, destination);
            // Successors are scanned in ascending edge order, so strict
            // comparison keeps the lowest id on ties.
            if best.map(|(s, _)| score < s).unwrap_or(true) {
                best = Some((score, next));
            }
        }
        match best {
            Some((_, next)) => {
                visited[next.usize()] = true;
                path.push(next);
            }
            None => {
                path.pop();
                if path.is_empty() {
                    return Err(RoutingError::NoPath {
                        from: net.edge(origin).id.clone(),
                        to: net.edge(destination).id.clone(),
                    });
                }
            }
        }
    }
}
