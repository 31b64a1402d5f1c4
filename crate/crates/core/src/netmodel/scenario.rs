//! Scenario files: a single JSON document with `network`, `signals`,
//! `demand`, `incidents`, `icm` and `sim` sections. Loading resolves all
//! string references into indices and validates every structural invariant;
//! saving emits the canonical form that round-trips byte-identically.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    Edge, EdgeIdx, IntersectionSpec, MoveIdx, Movement, NetworkModel, Node, NodeIdx, TurnClass,
};
use crate::behavior::IcmConfig;
use crate::incidents::{EdgeDistribution, FixedIncident, IncidentConfig, IncidentMode};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// Parse failures carry serde_json's line and column context.
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    /// Names the first violated invariant.
    #[error("validation error: {0}")]
    Validation(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriverClass {
    Experienced,
    Novice,
    Distracted,
    Cav,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriverType {
    pub class: DriverClass,
    pub share: f64,
    /// Travel-time estimation error fraction for this class.
    pub estimation_error: f64,
}

/// The four-class driver mix with shares and estimation errors.
pub fn default_driver_mix() -> Vec<DriverType> {
    vec![
        DriverType {
            class: DriverClass::Experienced,
            share: 0.4,
            estimation_error: 0.05,
        },
        DriverType {
            class: DriverClass::Novice,
            share: 0.3,
            estimation_error: 0.10,
        },
        DriverType {
            class: DriverClass::Distracted,
            share: 0.2,
            estimation_error: 0.20,
        },
        DriverType {
            class: DriverClass::Cav,
            share: 0.1,
            estimation_error: 0.01,
        },
    ]
}

#[derive(Clone, Debug)]
pub struct DemandFlow {
    pub origin: EdgeIdx,
    pub destination: EdgeIdx,
    pub rate_veh_h: f64,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Clone, Debug)]
pub struct DemandSpec {
    pub flows: Vec<DemandFlow>,
    pub driver_mix: Vec<DriverType>,
}

#[derive(Clone, Debug)]
pub struct Region {
    pub id: String,
    pub nodes: Vec<NodeIdx>,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub episode_s: f64,
    pub warmup_s: f64,
    pub decision_period_s: f64,
    pub regions: Vec<Region>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            episode_s: 3600.0,
            warmup_s: 100.0,
            decision_period_s: 10.0,
            regions: Vec::new(),
        }
    }
}

/// A fully validated scenario with all cross-references resolved.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: String,
    pub net: NetworkModel,
    pub demand: DemandSpec,
    pub incidents: IncidentConfig,
    pub icm: IcmConfig,
    pub sim: SimConfig,
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    id: String,
    network: NetworkFile,
    signals: SignalsFile,
    demand: DemandFile,
    incidents: IncidentsFile,
    icm: IcmConfig,
    sim: SimFile,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<NodeFile>,
    edges: Vec<EdgeFile>,
    movements: Vec<MovementFile>,
    /// Explicit conflict override; derived geometrically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conflicts: Option<Vec<(String, String)>>,
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    id: String,
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeFile {
    id: String,
    from: String,
    to: String,
    length_m: f64,
    lanes: u32,
    speed_limit_ms: f64,
}

#[derive(Serialize, Deserialize)]
struct MovementFile {
    id: String,
    from_edge: String,
    from_lane: u32,
    to_edge: String,
    to_lane: u32,
    turn: TurnClass,
}

#[derive(Serialize, Deserialize)]
struct SignalsFile {
    intersections: Vec<IntersectionFile>,
}

#[derive(Serialize, Deserialize)]
struct IntersectionFile {
    node: String,
    phases: Vec<Vec<String>>,
    yellow_s: f64,
    fixed_cycle_s: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DemandFile {
    flows: Vec<FlowFile>,
    #[serde(default = "default_driver_mix")]
    driver_mix: Vec<DriverType>,
}

#[derive(Serialize, Deserialize)]
struct FlowFile {
    origin: String,
    destination: String,
    rate_veh_h: f64,
    #[serde(default)]
    start_s: f64,
    /// Defaults to the episode length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end_s: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct IncidentsFile {
    mode: IncidentMode,
    #[serde(default = "default_count")]
    count: u32,
    #[serde(default)]
    edge_distribution: EdgeDistributionFile,
    #[serde(default = "default_rate_per_min")]
    duration_rate_per_min: f64,
    #[serde(default = "default_min_lead")]
    min_lead_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    fixed: Vec<FixedIncidentFile>,
}

fn default_count() -> u32 {
    2
}
fn default_rate_per_min() -> f64 {
    0.029
}
fn default_min_lead() -> f64 {
    1200.0
}

#[derive(Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum EdgeDistributionFile {
    #[default]
    Uniform,
    Empirical {
        volumes: BTreeMap<String, f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct FixedIncidentFile {
    edge: String,
    position_m: f64,
    lanes_blocked: u32,
    start_s: f64,
    duration_s: f64,
}

#[derive(Serialize, Deserialize)]
struct SimFile {
    episode_s: f64,
    warmup_s: f64,
    decision_period_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    regions: Vec<RegionFile>,
}

#[derive(Serialize, Deserialize)]
struct RegionFile {
    id: String,
    nodes: Vec<String>,
}

// ---------------------------------------------------------------------------
// Load / save
// ---------------------------------------------------------------------------

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_scenario_str(&text)
}

pub fn load_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    resolve(file)
}

/// Serializes a scenario to its canonical JSON form.
pub fn save_scenario(scenario: &Scenario) -> String {
    let file = to_file(scenario);
    let mut text = serde_json::to_string_pretty(&file).expect("scenario serialization");
    text.push('\n');
    text
}

fn resolve(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    let err = |msg: String| ScenarioError::Validation(msg);

    let nodes: Vec<Node> = file
        .network
        .nodes
        .iter()
        .map(|n| Node {
            id: n.id.clone(),
            x: n.x,
            y: n.y,
        })
        .collect();
    let node_index: BTreeMap<&str, NodeIdx> = file
        .network
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), NodeIdx(i as u32)))
        .collect();
    let mut edges: Vec<Edge> = Vec::with_capacity(file.network.edges.len());
    let mut edge_index: BTreeMap<&str, EdgeIdx> = BTreeMap::new();
    for (i, e) in file.network.edges.iter().enumerate() {
        let from = *node_index
            .get(e.from.as_str())
            .ok_or_else(|| err(format!("edge {}: unknown from-node {}", e.id, e.from)))?;
        let to = *node_index
            .get(e.to.as_str())
            .ok_or_else(|| err(format!("edge {}: unknown to-node {}", e.id, e.to)))?;
        edges.push(Edge {
            id: e.id.clone(),
            from,
            to,
            length: e.length_m,
            lanes: e.lanes,
            speed_limit: e.speed_limit_ms,
        });
        edge_index.insert(e.id.as_str(), EdgeIdx(i as u32));
    }
    let mut movements: Vec<Movement> = Vec::with_capacity(file.network.movements.len());
    let mut movement_index: BTreeMap<&str, MoveIdx> = BTreeMap::new();
    for (i, m) in file.network.movements.iter().enumerate() {
        let from_edge = *edge_index
            .get(m.from_edge.as_str())
            .ok_or_else(|| err(format!("movement {}: unknown edge {}", m.id, m.from_edge)))?;
        let to_edge = *edge_index
            .get(m.to_edge.as_str())
            .ok_or_else(|| err(format!("movement {}: unknown edge {}", m.id, m.to_edge)))?;
        movements.push(Movement {
            id: m.id.clone(),
            from_edge,
            from_lane: m.from_lane,
            to_edge,
            to_lane: m.to_lane,
            turn: m.turn,
        });
        movement_index.insert(m.id.as_str(), MoveIdx(i as u32));
    }
    let conflicts = match &file.network.conflicts {
        None => None,
        Some(pairs) => {
            let mut set = BTreeSet::new();
            for (a, b) in pairs {
                let ia = *movement_index
                    .get(a.as_str())
                    .ok_or_else(|| err(format!("conflict pair references unknown movement {a}")))?;
                let ib = *movement_index
                    .get(b.as_str())
                    .ok_or_else(|| err(format!("conflict pair references unknown movement {b}")))?;
                set.insert(if ia < ib { (ia, ib) } else { (ib, ia) });
            }
            Some(set)
        }
    };
    let mut intersections: Vec<IntersectionSpec> = Vec::new();
    for i in &file.signals.intersections {
        let node = *node_index
            .get(i.node.as_str())
            .ok_or_else(|| err(format!("signals: unknown node {}", i.node)))?;
        let mut phases = Vec::with_capacity(i.phases.len());
        for phase in &i.phases {
            let mut resolved = Vec::with_capacity(phase.len());
            for m in phase {
                resolved.push(*movement_index.get(m.as_str()).ok_or_else(|| {
                    err(format!("signals at {}: unknown movement {}", i.node, m))
                })?);
            }
            phases.push(resolved);
        }
        intersections.push(IntersectionSpec {
            node,
            phases,
            yellow_s: i.yellow_s,
            fixed_cycle_s: i.fixed_cycle_s.clone(),
        });
    }

    let net = NetworkModel::assemble(nodes, edges, movements, intersections, conflicts)
        .map_err(ScenarioError::Validation)?;

    let sim = SimConfig {
        episode_s: file.sim.episode_s,
        warmup_s: file.sim.warmup_s,
        decision_period_s: file.sim.decision_period_s,
        regions: file
            .sim
            .regions
            .iter()
            .map(|r| {
                let nodes = r
                    .nodes
                    .iter()
                    .map(|n| {
                        net.node_idx(n)
                            .ok_or_else(|| err(format!("region {}: unknown node {n}", r.id)))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Region {
                    id: r.id.clone(),
                    nodes,
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?,
    };
    if !(sim.episode_s > 0.0) || sim.warmup_s < 0.0 || sim.warmup_s >= sim.episode_s {
        return Err(err("sim: warm-up must lie inside the episode".into()));
    }
    if !(sim.decision_period_s >= 1.0) || sim.decision_period_s.fract() != 0.0 {
        return Err(err(
            "sim: decision period must be a whole multiple of the 1 s step".into(),
        ));
    }

    let mut flows = Vec::with_capacity(file.demand.flows.len());
    for f in &file.demand.flows {
        let origin = net
            .edge_idx(&f.origin)
            .ok_or_else(|| err(format!("flow: unknown origin edge {}", f.origin)))?;
        let destination = net
            .edge_idx(&f.destination)
            .ok_or_else(|| err(format!("flow: unknown destination edge {}", f.destination)))?;
        if f.rate_veh_h < 0.0 {
            return Err(err(format!(
                "flow {} -> {}: negative rate",
                f.origin, f.destination
            )));
        }
        let end_s = f.end_s.unwrap_or(sim.episode_s);
        if f.start_s < 0.0 || end_s > sim.episode_s || f.start_s > end_s {
            return Err(err(format!(
                "flow {} -> {}: active interval outside the episode horizon",
                f.origin, f.destination
            )));
        }
        flows.push(DemandFlow {
            origin,
            destination,
            rate_veh_h: f.rate_veh_h,
            start_s: f.start_s,
            end_s,
        });
    }
    let mix = file.demand.driver_mix;
    let share_sum: f64 = mix.iter().map(|d| d.share).sum();
    if !mix.is_empty() && (share_sum - 1.0).abs() > 1e-9 {
        return Err(err(format!(
            "driver mix shares sum to {share_sum}, expected 1"
        )));
    }
    if mix.is_empty() {
        return Err(err("driver mix must not be empty".into()));
    }
    for d in &mix {
        if !(0.0..=1.0).contains(&d.estimation_error) || d.share < 0.0 {
            return Err(err(
                "driver mix: shares must be nonnegative and errors in [0, 1]".into(),
            ));
        }
    }
    let demand = DemandSpec {
        flows,
        driver_mix: mix,
    };

    let edge_distribution = match &file.incidents.edge_distribution {
        EdgeDistributionFile::Uniform => EdgeDistribution::Uniform,
        EdgeDistributionFile::Empirical { volumes } => {
            let mut resolved = Vec::new();
            for (name, v) in volumes {
                let e = net
                    .edge_idx(name)
                    .ok_or_else(|| err(format!("incident volumes: unknown edge {name}")))?;
                if *v < 0.0 {
                    return Err(err(format!("incident volumes: negative volume on {name}")));
                }
                resolved.push((e, *v));
            }
            EdgeDistribution::Empirical { volumes: resolved }
        }
    };
    let mut fixed = Vec::new();
    for inc in &file.incidents.fixed {
        let edge = net
            .edge_idx(&inc.edge)
            .ok_or_else(|| err(format!("fixed incident: unknown edge {}", inc.edge)))?;
        let e = net.edge(edge);
        if inc.position_m < 10.0 || inc.position_m > e.length - 10.0 {
            return Err(err(format!(
                "fixed incident on {}: position must lie in [10, {}]",
                inc.edge,
                e.length - 10.0
            )));
        }
        if inc.lanes_blocked < 1 || inc.lanes_blocked > e.lanes {
            return Err(err(format!(
                "fixed incident on {}: blocked lane count must lie in [1, {}]",
                inc.edge, e.lanes
            )));
        }
        if inc.start_s < sim.warmup_s {
            return Err(err(format!(
                "fixed incident on {}: start must not precede the warm-up end",
                inc.edge
            )));
        }
        if !(inc.duration_s > 0.0) {
            return Err(err(format!(
                "fixed incident on {}: duration must be positive",
                inc.edge
            )));
        }
        fixed.push(FixedIncident {
            edge,
            position_m: inc.position_m,
            lanes_blocked: inc.lanes_blocked,
            start_s: inc.start_s,
            duration_s: inc.duration_s,
        });
    }
    if !(file.incidents.duration_rate_per_min > 0.0) {
        return Err(err("incidents: duration rate must be positive".into()));
    }
    let incidents = IncidentConfig {
        mode: file.incidents.mode,
        count: file.incidents.count,
        edge_distribution,
        duration_rate_per_min: file.incidents.duration_rate_per_min,
        min_lead_s: file.incidents.min_lead_s,
        fixed,
    };
    if incidents.mode == IncidentMode::Random
        && sim.warmup_s >= sim.episode_s - incidents.min_lead_s
    {
        return Err(err("incidents: start window is empty".into()));
    }

    file.icm.validate().map_err(ScenarioError::Validation)?;

    Ok(Scenario {
        id: file.id,
        net,
        demand,
        incidents,
        icm: file.icm,
        sim,
    })
}

fn to_file(s: &Scenario) -> ScenarioFile {
    let net = &s.net;
    let edge_name = |e: EdgeIdx| net.edge(e).id.clone();
    ScenarioFile {
        id: s.id.clone(),
        network: NetworkFile {
            nodes: net
                .nodes
                .iter()
                .map(|n| NodeFile {
                    id: n.id.clone(),
                    x: n.x,
                    y: n.y,
                })
                .collect(),
            edges: net
                .edges
                .iter()
                .map(|e| EdgeFile {
                    id: e.id.clone(),
                    from: net.node(e.from).id.clone(),
                    to: net.node(e.to).id.clone(),
                    length_m: e.length,
                    lanes: e.lanes,
                    speed_limit_ms: e.speed_limit,
                })
                .collect(),
            movements: net
                .movements
                .iter()
                .map(|m| MovementFile {
                    id: m.id.clone(),
                    from_edge: edge_name(m.from_edge),
                    from_lane: m.from_lane,
                    to_edge: edge_name(m.to_edge),
                    to_lane: m.to_lane,
                    turn: m.turn,
                })
                .collect(),
            conflicts: Some(
                net.conflicts
                    .iter()
                    .map(|(a, b)| (net.movement(*a).id.clone(), net.movement(*b).id.clone()))
                    .collect(),
            ),
        },
        signals: SignalsFile {
            intersections: net
                .intersections
                .iter()
                .map(|i| IntersectionFile {
                    node: net.node(i.node).id.clone(),
                    phases: i
                        .phases
                        .iter()
                        .map(|p| p.iter().map(|m| net.movement(*m).id.clone()).collect())
                        .collect(),
                    yellow_s: i.yellow_s,
                    fixed_cycle_s: i.fixed_cycle_s.clone(),
                })
                .collect(),
        },
        demand: DemandFile {
            flows: s
                .demand
                .flows
                .iter()
                .map(|f| FlowFile {
                    origin: edge_name(f.origin),
                    destination: edge_name(f.destination),
                    rate_veh_h: f.rate_veh_h,
                    start_s: f.start_s,
                    end_s: Some(f.end_s),
                })
                .collect(),
            driver_mix: s.demand.driver_mix.clone(),
        },
        incidents: IncidentsFile {
            mode: s.incidents.mode,
            count: s.incidents.count,
            edge_distribution: match &s.incidents.edge_distribution {
                EdgeDistribution::Uniform => EdgeDistributionFile::Uniform,
                EdgeDistribution::Empirical { volumes } => EdgeDistributionFile::Empirical {
                    volumes: volumes.iter().map(|(e, v)| (edge_name(*e), *v)).collect(),
                },
            },
            duration_rate_per_min: s.incidents.duration_rate_per_min,
            min_lead_s: s.incidents.min_lead_s,
            fixed: s
                .incidents
                .fixed
                .iter()
                .map(|f| FixedIncidentFile {
                    edge: edge_name(f.edge),
                    position_m: f.position_m,
                    lanes_blocked: f.lanes_blocked,
                    start_s: f.start_s,
                    duration_s: f.duration_s,
                })
                .collect(),
        },
        icm: s.icm.clone(),
        sim: SimFile {
            episode_s: s.sim.episode_s,
            warmup_s: s.sim.warmup_s,
            decision_period_s: s.sim.decision_period_s,
            regions: s
                .sim
                .regions
                .iter()
                .map(|r| RegionFile {
                    id: r.id.clone(),
                    nodes: r.nodes.iter().map(|n| net.node(*n).id.clone()).collect(),
                })
                .collect(),
        },
    }
}

/// Builds a complete grid scenario: network from [`generate_grid`], border to
/// border through-demand on every row and column, default driver mix, ICM and
/// incident configuration.
///
/// [`generate_grid`]: super::generate_grid
pub fn grid_scenario(
    rows: u32,
    cols: u32,
    edge_length: f64,
    lanes: u32,
    speed_limit: f64,
    demand_rate_veh_h: f64,
) -> Result<Scenario, String> {
    let net = super::generate_grid(rows, cols, edge_length, lanes, speed_limit)?;
    let sim = SimConfig::default();
    let mut flows = Vec::new();
    let mut add_flow = |origin: String, destination: String| {
        let o = net.edge_idx(&origin).expect("grid edge");
        let d = net.edge_idx(&destination).expect("grid edge");
        flows.push(DemandFlow {
            origin: o,
            destination: d,
            rate_veh_h: demand_rate_veh_h,
            start_s: 0.0,
            end_s: sim.episode_s,
        });
    };
    for r in 0..rows {
        add_flow(format!("W{r}->J{r}x0"), format!("J{r}x{}->E{r}", cols - 1));
        add_flow(format!("E{r}->J{r}x{}", cols - 1), format!("J{r}x0->W{r}"));
    }
    for c in 0..cols {
        add_flow(format!("S{c}->J0x{c}"), format!("J{}x{c}->N{c}", rows - 1));
        add_flow(format!("N{c}->J{}x{c}", rows - 1), format!("J0x{c}->S{c}"));
    }
    Ok(Scenario {
        id: format!("grid{rows}x{cols}"),
        net,
        demand: DemandSpec {
            flows,
            driver_mix: default_driver_mix(),
        },
        incidents: IncidentConfig::default_random(),
        icm: IcmConfig::default(),
        sim,
    })
}

/// A one-directional corridor of `segments` consecutive edges with a single
/// end-to-end flow; no signals. The scripted backbone for incident tests.
pub fn corridor_scenario(
    segments: u32,
    edge_length: f64,
    lanes: u32,
    speed_limit: f64,
    demand_rate_veh_h: f64,
) -> Result<Scenario, String> {
    assert!(segments >= 1);
    let mut nodes = Vec::new();
    for i in 0..=segments {
        nodes.push(Node {
            id: format!("n{i}"),
            x: i as f64 * edge_length,
            y: 0.0,
        });
    }
    let mut edges = Vec::new();
    for i in 0..segments {
        edges.push(Edge {
            id: format!("e{i}"),
            from: NodeIdx(i),
            to: NodeIdx(i + 1),
            length: edge_length,
            lanes,
            speed_limit,
        });
    }
    let mut movements = Vec::new();
    for i in 0..segments.saturating_sub(1) {
        for lane in 0..lanes {
            movements.push(Movement {
                id: format!("m{i}_{lane}"),
                from_edge: EdgeIdx(i),
                from_lane: lane,
                to_edge: EdgeIdx(i + 1),
                to_lane: lane,
                turn: TurnClass::Through,
            });
        }
    }
    let net = NetworkModel::assemble(nodes, edges, movements, vec![], None)?;
    let sim = SimConfig::default();
    let flows = vec![DemandFlow {
        origin: EdgeIdx(0),
        destination: EdgeIdx(segments - 1),
        rate_veh_h: demand_rate_veh_h,
        start_s: 0.0,
        end_s: sim.episode_s,
    }];
    Ok(Scenario {
        id: format!("corridor{segments}"),
        net,
        demand: DemandSpec {
            flows,
            driver_mix: default_driver_mix(),
        },
        incidents: IncidentConfig::none(),
        icm: IcmConfig::default(),
        sim,
    })
}

/// Two parallel routes between a split and a merge: entry edge, a short
/// primary and a longer alternative, then a common exit edge.
pub fn diamond_scenario(demand_rate_veh_h: f64) -> Result<Scenario, String> {
    let nodes = vec![
        Node {
            id: "x".into(),
            x: 0.0,
            y: 0.0,
        },
        Node {
            id: "a".into(),
            x: 150.0,
            y: 0.0,
        },
        Node {
            id: "b".into(),
            x: 300.0,
            y: 0.0,
        },
        Node {
            id: "y".into(),
            x: 450.0,
            y: 0.0,
        },
    ];
    let edges = vec![
        Edge {
            id: "in".into(),
            from: NodeIdx(0),
            to: NodeIdx(1),
            length: 150.0,
            lanes: 1,
            speed_limit: 10.0,
        },
        Edge {
            id: "primary".into(),
            from: NodeIdx(1),
            to: NodeIdx(2),
            length: 150.0,
            lanes: 1,
            speed_limit: 10.0,
        },
        Edge {
            id: "alternative".into(),
            from: NodeIdx(1),
            to: NodeIdx(2),
            length: 300.0,
            lanes: 1,
            speed_limit: 10.0,
        },
        Edge {
            id: "out".into(),
            from: NodeIdx(2),
            to: NodeIdx(3),
            length: 150.0,
            lanes: 1,
            speed_limit: 10.0,
        },
    ];
    let movements = vec![
        Movement {
            id: "m_in_primary".into(),
            from_edge: EdgeIdx(0),
            from_lane: 0,
            to_edge: EdgeIdx(1),
            to_lane: 0,
            turn: TurnClass::Through,
        },
        Movement {
            id: "m_in_alt".into(),
            from_edge: EdgeIdx(0),
            from_lane: 0,
            to_edge: EdgeIdx(2),
            to_lane: 0,
            turn: TurnClass::Through,
        },
        Movement {
            id: "m_primary_out".into(),
            from_edge: EdgeIdx(1),
            from_lane: 0,
            to_edge: EdgeIdx(3),
            to_lane: 0,
            turn: TurnClass::Through,
        },
        Movement {
            id: "m_alt_out".into(),
            from_edge: EdgeIdx(2),
            from_lane: 0,
            to_edge: EdgeIdx(3),
            to_lane: 0,
            turn: TurnClass::Through,
        },
    ];
    let net = NetworkModel::assemble(nodes, edges, movements, vec![], None)?;
    let sim = SimConfig::default();
    let flows = vec![DemandFlow {
        origin: EdgeIdx(0),
        destination: EdgeIdx(3),
        rate_veh_h: demand_rate_veh_h,
        start_s: 0.0,
        end_s: sim.episode_s,
    }];
    Ok(Scenario {
        id: "diamond".into(),
        net,
        demand: DemandSpec {
            flows,
            driver_mix: default_driver_mix(),
        },
        incidents: IncidentConfig::none(),
        icm: IcmConfig::default(),
        sim,
    })
}
