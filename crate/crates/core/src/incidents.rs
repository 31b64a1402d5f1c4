//! Incident initialization: sampling disruption parameters from configured
//! distributions. Deployment and clearance act on the running simulation and
//! live in [`crate::simcore`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{EdgeIdx, NetworkModel, MIN_EDGE_LENGTH_M};
use crate::rng::SimRng;
use crate::simcore::VehicleId;

#[derive(Debug, Error, PartialEq)]
pub enum IncidentError {
    #[error("no eligible edge (length >= {MIN_EDGE_LENGTH_M} m) to place an incident on")]
    NoEligibleEdge,
    #[error("all edge volumes are zero")]
    AllZeroVolumes,
    #[error("incident start window is empty")]
    EmptyStartWindow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncidentMode {
    None,
    Fixed,
    Random,
}

#[derive(Clone, Debug)]
pub enum EdgeDistribution {
    Uniform,
    /// Volume-weighted empirical distribution; zero-volume edges never draw.
    Empirical {
        volumes: Vec<(EdgeIdx, f64)>,
    },
}

#[derive(Clone, Debug)]
pub struct FixedIncident {
    pub edge: EdgeIdx,
    pub position_m: f64,
    pub lanes_blocked: u32,
    pub start_s: f64,
    pub duration_s: f64,
}

#[derive(Clone, Debug)]
pub struct IncidentConfig {
    pub mode: IncidentMode,
    /// Incidents per episode in random mode.
    pub count: u32,
    pub edge_distribution: EdgeDistribution,
    /// Rate of the exponential duration distribution, per minute.
    pub duration_rate_per_min: f64,
    /// Start window runs from warm-up end to `episode - min_lead`.
    pub min_lead_s: f64,
    pub fixed: Vec<FixedIncident>,
}

impl IncidentConfig {
    pub fn none() -> Self {
        IncidentConfig {
            mode: IncidentMode::None,
            count: 0,
            edge_distribution: EdgeDistribution::Uniform,
            duration_rate_per_min: 0.029,
            min_lead_s: 1200.0,
            fixed: Vec::new(),
        }
    }

    /// Two random incidents per episode, uniform edge choice.
    pub fn default_random() -> Self {
        IncidentConfig {
            mode: IncidentMode::Random,
            count: 2,
            ..IncidentConfig::none()
        }
    }

    pub fn mean_duration_s(&self) -> f64 {
        60.0 / self.duration_rate_per_min
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncidentState {
    Pending,
    Active,
    Cleared,
}

/// One disruption: where, which lanes, when, and for how long. Start and
/// duration are aligned to whole simulation steps so deployment happens at
/// exactly `start_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Incident {
    pub edge: EdgeIdx,
    pub position_m: f64,
    /// Blocked lane indices, always the rightmost ones.
    pub blocked_lanes: Vec<u32>,
    pub start_s: u64,
    pub duration_s: u64,
    pub state: IncidentState,
    pub ic_vehicles: Vec<VehicleId>,
}

impl Incident {
    pub fn end_s(&self) -> u64 {
        self.start_s + self.duration_s
    }

    pub fn blocks_lane(&self, lane: u32) -> bool {
        self.blocked_lanes.contains(&lane)
    }
}

/// Normalizes per-edge traffic volumes into a categorical distribution,
/// excluding zero-volume edges.
pub fn empirical_edge_distribution(
    volumes: &[(EdgeIdx, f64)],
) -> Result<Vec<(EdgeIdx, f64)>, IncidentError> {
    let total: f64 = volumes.iter().map(|(_, v)| v.max(0.0)).sum();
    if total <= 0.0 {
        return Err(IncidentError::AllZeroVolumes);
    }
    Ok(volumes
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(e, v)| (*e, v / total))
        .collect())
}

/// Samples one incident: edge from the configured distribution, blocked lane
/// count uniform in `[1, lanes]` (rightmost lanes), position uniform in
/// `[10, length - 10]`, start uniform in the post-warm-up window, duration
/// exponential.
pub fn sample_incident(
    cfg: &IncidentConfig,
    net: &NetworkModel,
    warmup_s: f64,
    episode_s: f64,
    rng: &mut SimRng,
) -> Result<Incident, IncidentError> {
    let eligible: Vec<EdgeIdx> = (0..net.edges.len())
        .map(|i| EdgeIdx(i as u32))
        .filter(|&e| net.edge(e).length >= MIN_EDGE_LENGTH_M)
        .collect();
    if eligible.is_empty() {
        return Err(IncidentError::NoEligibleEdge);
    }
    let latest_start = episode_s - cfg.min_lead_s;
    if latest_start <= warmup_s {
        return Err(IncidentError::EmptyStartWindow);
    }
    let edge = match &cfg.edge_distribution {
        EdgeDistribution::Uniform => {
            eligible[rng.uniform_int(0, eligible.len() as u32 - 1) as usize]
        }
        EdgeDistribution::Empirical { volumes } => {
            let dist = empirical_edge_distribution(volumes)?;
            let weights: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
            dist[rng.weighted_index(&weights)].0
        }
    };
    let lanes = net.edge(edge).lanes;
    let blocked_count = rng.uniform_int(1, lanes);
    let position_m = rng.uniform(10.0, net.edge(edge).length - 10.0);
    let start_s = rng.uniform(warmup_s, latest_start).floor() as u64;
    let duration_s = rng.exponential(cfg.mean_duration_s()).round().max(1.0) as u64;
    Ok(Incident {
        edge,
        position_m,
        blocked_lanes: (0..blocked_count).collect(),
        start_s,
        duration_s,
        state: IncidentState::Pending,
        ic_vehicles: Vec::new(),
    })
}

/// Draws the episode's incident list according to the configured mode.
pub fn draw_incidents(
    cfg: &IncidentConfig,
    net: &NetworkModel,
    warmup_s: f64,
    episode_s: f64,
    rng: &mut SimRng,
) -> Result<Vec<Incident>, IncidentError> {
    match cfg.mode {
        IncidentMode::None => Ok(Vec::new()),
        IncidentMode::Fixed => Ok(cfg
            .fixed
            .iter()
            .map(|f| Incident {
                edge: f.edge,
                position_m: f.position_m,
                blocked_lanes: (0..f.lanes_blocked).collect(),
                start_s: f.start_s.floor() as u64,
                duration_s: f.duration_s.round().max(1.0) as u64,
                state: IncidentState::Pending,
                ic_vehicles: Vec::new(),
            })
            .collect()),
        IncidentMode::Random => (0..cfg.count)
            .map(|_| sample_incident(cfg, net, warmup_s, episode_s, rng))
            .collect(),
    }
}
