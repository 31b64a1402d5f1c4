//! Static road network: nodes, edges, movements, signal phase tables and the
//! structural validation that keeps them consistent.

mod grid;
mod scenario;

pub use grid::generate_grid;
pub use scenario::{
    corridor_scenario, default_driver_mix, diamond_scenario, grid_scenario, load_scenario,
    load_scenario_str, save_scenario, DemandFlow, DemandSpec, DriverClass, DriverType, Region,
    Scenario, ScenarioError, SimConfig,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// Shortest edge the model accepts, in meters. Keeps the incident position
/// interval `[10, length - 10]` nonempty.
pub const MIN_EDGE_LENGTH_M: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeIdx(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeIdx(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MoveIdx(pub u32);

impl NodeIdx {
    pub fn usize(self) -> usize {
        self.0 as usize
    }
}
impl EdgeIdx {
    pub fn usize(self) -> usize {
        self.0 as usize
    }
}
impl MoveIdx {
    pub fn usize(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

/// A directed road segment with one or more lanes.
#[derive(Clone, Debug)]
pub struct Edge {
    pub id: String,
    pub from: NodeIdx,
    pub to: NodeIdx,
    /// Length in meters, at least [`MIN_EDGE_LENGTH_M`].
    pub length: f64,
    /// Lane count; lane 0 is the rightmost lane.
    pub lanes: u32,
    /// Speed limit in m/s.
    pub speed_limit: f64,
}

impl Edge {
    /// Unimpeded traversal time in seconds.
    pub fn free_flow_time(&self) -> f64 {
        self.length / self.speed_limit
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnClass {
    Through,
    Left,
    Right,
}

/// A permitted lane-to-lane transition across a node.
#[derive(Clone, Debug)]
pub struct Movement {
    pub id: String,
    pub from_edge: EdgeIdx,
    pub from_lane: u32,
    pub to_edge: EdgeIdx,
    pub to_lane: u32,
    pub turn: TurnClass,
}

/// Signal description of one intersection: an ordered phase list plus the
/// fixed-time cycle used by the fixed-time baseline.
#[derive(Clone, Debug)]
pub struct IntersectionSpec {
    pub node: NodeIdx,
    /// Each phase is the set of movements that show green together.
    pub phases: Vec<Vec<MoveIdx>>,
    pub yellow_s: f64,
    /// One duration per phase, in seconds.
    pub fixed_cycle_s: Vec<f64>,
}

/// A conflicting pair found inside a phase.
#[derive(Clone, Debug, PartialEq)]
pub struct ConflictViolation {
    pub phase: usize,
    pub a: MoveIdx,
    pub b: MoveIdx,
}

/// The immutable world: graph, movements, signals and the movement conflict
/// relation. Safe to share read-only across episode runners.
#[derive(Clone, Debug)]
pub struct NetworkModel {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub movements: Vec<Movement>,
    pub intersections: Vec<IntersectionSpec>,
    /// Symmetric conflict relation, stored with `a < b`.
    pub conflicts: BTreeSet<(MoveIdx, MoveIdx)>,
    node_index: BTreeMap<String, NodeIdx>,
    edge_index: BTreeMap<String, EdgeIdx>,
    /// Movements leaving each edge, in movement order.
    out_movements: Vec<Vec<MoveIdx>>,
    /// Distinct successor edges of each edge, ascending.
    successors: Vec<Vec<EdgeIdx>>,
    /// Distinct predecessor edges of each edge, ascending.
    predecessors: Vec<Vec<EdgeIdx>>,
    /// Edges entering each node, ascending.
    incoming_edges: Vec<Vec<EdgeIdx>>,
    /// Edges leaving each node, ascending.
    outgoing_edges: Vec<Vec<EdgeIdx>>,
}

impl NetworkModel {
    /// Assembles the derived lookup tables and validates every structural
    /// invariant. `conflicts` may be supplied explicitly (scenario override);
    /// otherwise the geometric rule of [`derive_conflicts`] is applied.
    pub fn assemble(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        movements: Vec<Movement>,
        intersections: Vec<IntersectionSpec>,
        conflicts: Option<BTreeSet<(MoveIdx, MoveIdx)>>,
    ) -> Result<Self, String> {
        let node_index: BTreeMap<String, NodeIdx> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), NodeIdx(i as u32)))
            .collect();
        if node_index.len() != nodes.len() {
            return Err("duplicate node id".into());
        }
        let edge_index: BTreeMap<String, EdgeIdx> = edges
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), EdgeIdx(i as u32)))
            .collect();
        if edge_index.len() != edges.len() {
            return Err("duplicate edge id".into());
        }

        for e in &edges {
            if e.from.usize() >= nodes.len() || e.to.usize() >= nodes.len() {
                return Err(format!("edge {}: endpoint node does not exist", e.id));
            }
            if e.length < MIN_EDGE_LENGTH_M {
                return Err(format!(
                    "edge {}: length {} m is below the {} m minimum",
                    e.id, e.length, MIN_EDGE_LENGTH_M
                ));
            }
            if e.lanes < 1 {
                return Err(format!("edge {}: lane count must be at least 1", e.id));
            }
            if !(e.speed_limit > 0.0) {
                return Err(format!("edge {}: speed limit must be positive", e.id));
            }
        }

        for m in &movements {
            let from = edges
                .get(m.from_edge.usize())
                .ok_or_else(|| format!("movement {}: unknown incoming edge", m.id))?;
            let to = edges
                .get(m.to_edge.usize())
                .ok_or_else(|| format!("movement {}: unknown outgoing edge", m.id))?;
            if m.from_lane >= from.lanes {
                return Err(format!(
                    "movement {}: incoming lane {} does not exist on edge {}",
                    m.id, m.from_lane, from.id
                ));
            }
            if m.to_lane >= to.lanes {
                return Err(format!(
                    "movement {}: outgoing lane {} does not exist on edge {}",
                    m.id, m.to_lane, to.id
                ));
            }
            if from.to != to.from {
                return Err(format!(
                    "movement {}: incoming edge {} ends at a different node than outgoing edge {} starts",
                    m.id, from.id, to.id
                ));
            }
        }

        let mut out_movements = vec![Vec::new(); edges.len()];
        let mut successors: Vec<BTreeSet<EdgeIdx>> = vec![BTreeSet::new(); edges.len()];
        let mut predecessors: Vec<BTreeSet<EdgeIdx>> = vec![BTreeSet::new(); edges.len()];
        for (i, m) in movements.iter().enumerate() {
            out_movements[m.from_edge.usize()].push(MoveIdx(i as u32));
            successors[m.from_edge.usize()].insert(m.to_edge);
            predecessors[m.to_edge.usize()].insert(m.from_edge);
        }
        let mut incoming_edges = vec![Vec::new(); nodes.len()];
        let mut outgoing_edges = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            incoming_edges[e.to.usize()].push(EdgeIdx(i as u32));
            outgoing_edges[e.from.usize()].push(EdgeIdx(i as u32));
        }

        let mut net = NetworkModel {
            nodes,
            edges,
            movements,
            intersections,
            conflicts: BTreeSet::new(),
            node_index,
            edge_index,
            out_movements,
            successors: successors
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
            predecessors: predecessors
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
            incoming_edges,
            outgoing_edges,
        };
        net.conflicts = match conflicts {
            Some(c) => c,
            None => derive_conflicts(&net),
        };
        net.validate_intersections()?;
        Ok(net)
    }

    fn validate_intersections(&self) -> Result<(), String> {
        for spec in &self.intersections {
            let node = &self.nodes[spec.node.usize()];
            if spec.phases.len() < 2 {
                return Err(format!("intersection {}: needs at least 2 phases", node.id));
            }
            if !(spec.yellow_s > 0.0) {
                return Err(format!(
                    "intersection {}: yellow duration must be positive",
                    node.id
                ));
            }
            if spec.fixed_cycle_s.len() != spec.phases.len() {
                return Err(format!(
                    "intersection {}: fixed cycle must list one duration per phase",
                    node.id
                ));
            }
            if spec.fixed_cycle_s.iter().any(|d| !(*d > 0.0)) {
                return Err(format!(
                    "intersection {}: fixed cycle durations must be positive",
                    node.id
                ));
            }
            let node_moves = self.movements_at_node(spec.node);
            let node_move_set: BTreeSet<MoveIdx> = node_moves.iter().copied().collect();
            let mut covered: BTreeSet<MoveIdx> = BTreeSet::new();
            for (pi, phase) in spec.phases.iter().enumerate() {
                for &m in phase {
                    if m.usize() >= self.movements.len() || !node_move_set.contains(&m) {
                        return Err(format!(
                            "intersection {}: phase {} references movement not at this node",
                            node.id, pi
                        ));
                    }
                    covered.insert(m);
                }
            }
            if covered != node_move_set {
                return Err(format!(
                    "intersection {}: some movements appear in no phase",
                    node.id
                ));
            }
            let violations = check_phase_conflicts(spec, &self.conflicts)
                .map_err(|e| format!("intersection {}: {}", node.id, e))?;
            if let Some(v) = violations.first() {
                return Err(format!(
                    "intersection {}: phase {} contains conflicting movements {} and {}",
                    node.id,
                    v.phase,
                    self.movements[v.a.usize()].id,
                    self.movements[v.b.usize()].id
                ));
            }
        }
        Ok(())
    }

    pub fn node_idx(&self, id: &str) -> Option<NodeIdx> {
        self.node_index.get(id).copied()
    }

    pub fn edge_idx(&self, id: &str) -> Option<EdgeIdx> {
        self.edge_index.get(id).copied()
    }

    pub fn edge(&self, idx: EdgeIdx) -> &Edge {
        &self.edges[idx.usize()]
    }

    pub fn node(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx.usize()]
    }

    pub fn movement(&self, idx: MoveIdx) -> &Movement {
        &self.movements[idx.usize()]
    }

    pub fn out_movements(&self, edge: EdgeIdx) -> &[MoveIdx] {
        &self.out_movements[edge.usize()]
    }

    pub fn successors(&self, edge: EdgeIdx) -> &[EdgeIdx] {
        &self.successors[edge.usize()]
    }

    pub fn predecessors(&self, edge: EdgeIdx) -> &[EdgeIdx] {
        &self.predecessors[edge.usize()]
    }

    pub fn incoming_edges(&self, node: NodeIdx) -> &[EdgeIdx] {
        &self.incoming_edges[node.usize()]
    }

    pub fn outgoing_edges(&self, node: NodeIdx) -> &[EdgeIdx] {
        &self.outgoing_edges[node.usize()]
    }

    /// All movements crossing `node`, in movement order.
    pub fn movements_at_node(&self, node: NodeIdx) -> Vec<MoveIdx> {
        self.movements
            .iter()
            .enumerate()
            .filter(|(_, m)| self.edges[m.from_edge.usize()].to == node)
            .map(|(i, _)| MoveIdx(i as u32))
            .collect()
    }

    /// The movement connecting `(from_edge, from_lane)` to `to_edge`, if any.
    pub fn movement_between(
        &self,
        from_edge: EdgeIdx,
        from_lane: u32,
        to_edge: EdgeIdx,
    ) -> Option<MoveIdx> {
        self.out_movements[from_edge.usize()]
            .iter()
            .copied()
            .find(|&m| {
                let mv = &self.movements[m.usize()];
                mv.from_lane == from_lane && mv.to_edge == to_edge
            })
    }

    /// Lanes of `from_edge` that have a movement onto `to_edge`.
    pub fn connecting_lanes(&self, from_edge: EdgeIdx, to_edge: EdgeIdx) -> Vec<u32> {
        let mut lanes: Vec<u32> = self.out_movements[from_edge.usize()]
            .iter()
            .filter(|&&m| self.movements[m.usize()].to_edge == to_edge)
            .map(|&m| self.movements[m.usize()].from_lane)
            .collect();
        lanes.sort_unstable();
        lanes.dedup();
        lanes
    }

    /// Mean speed limit over all edges, m/s.
    pub fn mean_speed_limit(&self) -> f64 {
        self.edges.iter().map(|e| e.speed_limit).sum::<f64>() / self.edges.len() as f64
    }

    pub fn max_speed_limit(&self) -> f64 {
        self.edges.iter().map(|e| e.speed_limit).fold(0.0, f64::max)
    }

    pub fn conflicting(&self, a: MoveIdx, b: MoveIdx) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.conflicts.contains(&key)
    }
}

/// Lists the conflicting pairs inside each phase of `spec`. Empty iff every
/// phase is conflict-free.
pub fn check_phase_conflicts(
    spec: &IntersectionSpec,
    conflicts: &BTreeSet<(MoveIdx, MoveIdx)>,
) -> Result<Vec<ConflictViolation>, String> {
    let mut violations = Vec::new();
    for (pi, phase) in spec.phases.iter().enumerate() {
        for (i, &a) in phase.iter().enumerate() {
            for &b in &phase[i + 1..] {
                let key = if a < b { (a, b) } else { (b, a) };
                if conflicts.contains(&key) {
                    violations.push(ConflictViolation {
                        phase: pi,
                        a: key.0,
                        b: key.1,
                    });
                }
            }
        }
    }
    Ok(violations)
}

/// Derives the conflict relation geometrically. Movements from the same
/// incoming edge are compatible (they release in sequence), movements from
/// opposing approaches are compatible (parallel flows; permitted lefts yield),
/// and crossing approaches conflict unless both movements are right turns
/// into distinct lanes.
pub fn derive_conflicts(net: &NetworkModel) -> BTreeSet<(MoveIdx, MoveIdx)> {
    let mut conflicts = BTreeSet::new();
    let approach_dir = |edge: EdgeIdx| -> (f64, f64) {
        let e = net.edge(edge);
        let from = net.node(e.from);
        let to = net.node(e.to);
        let dx = to.x - from.x;
        let dy = to.y - from.y;
        let len = (dx * dx + dy * dy).sqrt().max(1e-9);
        (dx / len, dy / len)
    };
    for node in 0..net.nodes.len() {
        let moves = net.movements_at_node(NodeIdx(node as u32));
        for (i, &a) in moves.iter().enumerate() {
            for &b in &moves[i + 1..] {
                let ma = net.movement(a);
                let mb = net.movement(b);
                if ma.from_edge == mb.from_edge {
                    continue;
                }
                let da = approach_dir(ma.from_edge);
                let db = approach_dir(mb.from_edge);
                let opposing = da.0 * db.0 + da.1 * db.1 < -0.707;
                if opposing {
                    continue;
                }
                let both_right = ma.turn == TurnClass::Right && mb.turn == TurnClass::Right;
                let same_target = ma.to_edge == mb.to_edge && ma.to_lane == mb.to_lane;
                if both_right && !same_target {
                    continue;
                }
                conflicts.insert(if a < b { (a, b) } else { (b, a) });
            }
        }
    }
    conflicts
}
