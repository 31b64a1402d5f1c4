//! The decentralized control surface: per-intersection observation and reward
//! builders, phase application with yellow insertion, the rule-based
//! baselines, and a tabular Q-learning agent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{EdgeIdx, IntersectionSpec, MoveIdx, NetworkModel, TurnClass};
use crate::rng::SimRng;
use crate::simcore::{SignalColor, SimState, STOPPED_SPEED_MS};

/// Vehicles within this distance of the stop line count as approaching.
pub const APPROACH_HORIZON_M: f64 = 100.0;

/// Pressure observations are padded (or, for oversized intersections,
/// truncated) to this many movement-group slots.
pub const PRESSURE_SLOTS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("intersection index {0} does not exist")]
    UnknownIntersection(usize),
    #[error("phase index {got} out of range ({count} phases)")]
    InvalidPhase { got: usize, count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObsKind {
    LaneFeature,
    Pressure,
    Wave,
    Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardKind {
    DelayDelta,
    NegPressure,
    QueueWait,
}

/// Per-lane features for value-based agents.
#[derive(Clone, Debug, Serialize)]
pub struct LaneFeature {
    pub edge: EdgeIdx,
    pub lane: u32,
    pub signal: SignalColor,
    pub approaching: u32,
    pub stopped: u32,
    /// Summed waiting time of the currently stopped vehicles on the lane.
    pub accumulated_waiting_s: f64,
    /// Mean duration of completed stop events on this lane.
    pub avg_stop_time_s: f64,
    pub avg_approach_speed_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LaneFeatureObs {
    pub intersection: usize,
    pub lanes: Vec<LaneFeature>,
}

/// Current phase plus the 12-slot movement-pressure vector
/// `x = q_in - q_out`, grouped by (incoming edge, turn class) and
/// zero-padded.
#[derive(Clone, Debug, Serialize)]
pub struct PressureObs {
    pub intersection: usize,
    pub phase: usize,
    pub slots: [f64; PRESSURE_SLOTS],
    /// Movements backing each occupied slot, aligned with `slots`.
    pub groups: Vec<Vec<MoveIdx>>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WaveLane {
    pub edge: EdgeIdx,
    pub lane: u32,
    pub approaching: u32,
    /// Cumulative waiting of the vehicle closest to the stop line.
    pub head_wait_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveObs {
    pub intersection: usize,
    pub lanes: Vec<WaveLane>,
}

/// Directional approach totals across one region boundary.
#[derive(Clone, Debug, Serialize)]
pub struct RegionObs {
    pub region: String,
    pub inbound: u32,
    pub outbound: u32,
}

#[derive(Clone, Debug, Serialize)]
pub enum Observation {
    LaneFeature(LaneFeatureObs),
    Pressure(PressureObs),
    Wave(WaveObs),
    Region(Vec<RegionObs>),
}

fn incoming_lanes(net: &NetworkModel, spec: &IntersectionSpec) -> Vec<(EdgeIdx, u32)> {
    let mut lanes = Vec::new();
    for &edge in net.incoming_edges(spec.node) {
        for lane in 0..net.edge(edge).lanes {
            lanes.push((edge, lane));
        }
    }
    lanes
}

fn lane_counts(state: &SimState, edge: EdgeIdx, lane: u32) -> (u32, u32, f64, f64) {
    let net = &state.scenario.net;
    let len = net.edge(edge).length;
    let mut approaching = 0u32;
    let mut stopped = 0u32;
    let mut waiting = 0.0;
    let mut speed_sum = 0.0;
    for &id in state.vehicles_on_lane(edge, lane) {
        let Some(v) = state.vehicle(id) else { continue };
        if v.is_ic {
            continue;
        }
        let is_stopped = v.speed < STOPPED_SPEED_MS;
        if is_stopped {
            stopped += 1;
            waiting += v.waiting_s;
        }
        if len - v.offset <= APPROACH_HORIZON_M {
            approaching += 1;
            speed_sum += v.speed;
        }
    }
    (approaching, stopped, waiting, speed_sum)
}

/// Queue proxy for pressure: stopped vehicles anywhere on the lane plus
/// moving vehicles within the approach horizon of the lane end.
fn lane_pressure_count(state: &SimState, edge: EdgeIdx, lane: u32) -> u32 {
    let net = &state.scenario.net;
    let len = net.edge(edge).length;
    let mut count = 0u32;
    for &id in state.vehicles_on_lane(edge, lane) {
        let Some(v) = state.vehicle(id) else { continue };
        if v.is_ic {
            continue;
        }
        if v.speed < STOPPED_SPEED_MS || len - v.offset <= APPROACH_HORIZON_M {
            count += 1;
        }
    }
    count
}

fn lane_signal(state: &SimState, edge: EdgeIdx, lane: u32) -> SignalColor {
    let net = &state.scenario.net;
    let mut saw_yellow = false;
    let mut saw_any = false;
    for &m in net.out_movements(edge) {
        if net.movement(m).from_lane != lane {
            continue;
        }
        saw_any = true;
        match state.movement_color(m) {
            SignalColor::Green => return SignalColor::Green,
            SignalColor::Yellow => saw_yellow = true,
            SignalColor::Red => {}
        }
    }
    if saw_yellow {
        SignalColor::Yellow
    } else if saw_any {
        SignalColor::Red
    } else {
        SignalColor::Green // no controlled movement: free-running lane
    }
}

pub fn build_lane_feature(
    state: &SimState,
    intersection: usize,
) -> Result<LaneFeatureObs, ControlError> {
    let net = &state.scenario.net;
    let spec = net
        .intersections
        .get(intersection)
        .ok_or(ControlError::UnknownIntersection(intersection))?;
    let mut lanes = Vec::new();
    for (edge, lane) in incoming_lanes(net, spec) {
        let (approaching, stopped, waiting, speed_sum) = lane_counts(state, edge, lane);
        let (stop_sum, stop_events) = state.lane_stop_stats(edge, lane);
        lanes.push(LaneFeature {
            edge,
            lane,
            signal: lane_signal(state, edge, lane),
            approaching,
            stopped,
            accumulated_waiting_s: waiting,
            avg_stop_time_s: if stop_events > 0 {
                stop_sum / stop_events as f64
            } else {
                0.0
            },
            avg_approach_speed_ms: if approaching > 0 {
                speed_sum / approaching as f64
            } else {
                0.0
            },
        });
    }
    Ok(LaneFeatureObs {
        intersection,
        lanes,
    })
}

pub fn build_pressure(state: &SimState, intersection: usize) -> Result<PressureObs, ControlError> {
    let net = &state.scenario.net;
    let spec = net
        .intersections
        .get(intersection)
        .ok_or(ControlError::UnknownIntersection(intersection))?;
    // Group the intersection's movements by (incoming edge, turn class).
    let mut groups: Vec<((EdgeIdx, TurnClass), Vec<MoveIdx>)> = Vec::new();
    for m in net.movements_at_node(spec.node) {
        let mv = net.movement(m);
        let key = (mv.from_edge, mv.turn);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, list)) => list.push(m),
            None => groups.push((key, vec![m])),
        }
    }
    let mut slots = [0.0; PRESSURE_SLOTS];
    let mut group_movements = Vec::new();
    for (i, (_, movements)) in groups.iter().take(PRESSURE_SLOTS).enumerate() {
        let mut x = 0.0;
        for &m in movements {
            let mv = net.movement(m);
            let q_in = lane_pressure_count(state, mv.from_edge, mv.from_lane) as f64;
            let q_out = lane_pressure_count(state, mv.to_edge, mv.to_lane) as f64;
            x += q_in - q_out;
        }
        slots[i] = x;
        group_movements.push(movements.clone());
    }
    Ok(PressureObs {
        intersection,
        phase: state.signals[intersection].current_phase,
        slots,
        groups: group_movements,
    })
}

pub fn build_wave(state: &SimState, intersection: usize) -> Result<WaveObs, ControlError> {
    let net = &state.scenario.net;
    let spec = net
        .intersections
        .get(intersection)
        .ok_or(ControlError::UnknownIntersection(intersection))?;
    let mut lanes = Vec::new();
    for (edge, lane) in incoming_lanes(net, spec) {
        let (approaching, _, _, _) = lane_counts(state, edge, lane);
        let head_wait_s = state
            .vehicles_on_lane(edge, lane)
            .iter()
            .filter_map(|&id| state.vehicle(id))
            .find(|v| !v.is_ic)
            .map(|v| v.waiting_s)
            .unwrap_or(0.0);
        lanes.push(WaveLane {
            edge,
            lane,
            approaching,
            head_wait_s,
        });
    }
    Ok(WaveObs {
        intersection,
        lanes,
    })
}

/// Directional approaching totals across each region boundary edge; the
/// manager-style aggregate observation.
pub fn build_region(state: &SimState) -> Vec<RegionObs> {
    let net = &state.scenario.net;
    let mut out = Vec::new();
    for region in &state.scenario.sim.regions {
        let inside: std::collections::BTreeSet<_> = region.nodes.iter().copied().collect();
        let mut inbound = 0u32;
        let mut outbound = 0u32;
        for (i, e) in net.edges.iter().enumerate() {
            let edge = EdgeIdx(i as u32);
            let from_in = inside.contains(&e.from);
            let to_in = inside.contains(&e.to);
            if from_in == to_in {
                continue;
            }
            let mut total = 0u32;
            for lane in 0..e.lanes {
                let (approaching, _, _, _) = lane_counts(state, edge, lane);
                total += approaching;
            }
            if to_in {
                inbound += total;
            } else {
                outbound += total;
            }
        }
        out.push(RegionObs {
            region: region.id.clone(),
            inbound,
            outbound,
        });
    }
    out
}

pub fn build_observation(
    state: &SimState,
    intersection: usize,
    kind: ObsKind,
) -> Result<Observation, ControlError> {
    match kind {
        ObsKind::LaneFeature => Ok(Observation::LaneFeature(build_lane_feature(
            state,
            intersection,
        )?)),
        ObsKind::Pressure => Ok(Observation::Pressure(build_pressure(state, intersection)?)),
        ObsKind::Wave => Ok(Observation::Wave(build_wave(state, intersection)?)),
        ObsKind::Region => {
            if intersection >= state.scenario.net.intersections.len() {
                return Err(ControlError::UnknownIntersection(intersection));
            }
            Ok(Observation::Region(build_region(state)))
        }
    }
}

/// Per-decision-period reward.
pub fn compute_reward(
    state: &SimState,
    intersection: usize,
    kind: RewardKind,
) -> Result<f64, ControlError> {
    match kind {
        RewardKind::DelayDelta => {
            if intersection >= state.scenario.net.intersections.len() {
                return Err(ControlError::UnknownIntersection(intersection));
            }
            let (previous, current) = state.delay_accumulators(intersection);
            Ok(previous - current)
        }
        RewardKind::NegPressure => {
            let obs = build_pressure(state, intersection)?;
            Ok(-obs.slots.iter().sum::<f64>())
        }
        RewardKind::QueueWait => {
            let net = &state.scenario.net;
            let spec = net
                .intersections
                .get(intersection)
                .ok_or(ControlError::UnknownIntersection(intersection))?;
            let mut queue = 0.0;
            let mut waiting = 0.0;
            for (edge, lane) in incoming_lanes(net, spec) {
                let (_, stopped, wait, _) = lane_counts(state, edge, lane);
                queue += stopped as f64;
                waiting += wait;
            }
            Ok(-(queue + 0.1 * waiting))
        }
    }
}

/// Phase with the highest summed movement pressure; ties go to the lowest
/// index.
pub fn max_pressure_policy(obs: &PressureObs, phases: &[Vec<MoveIdx>]) -> usize {
    let mut best = 0;
    let mut best_pressure = f64::NEG_INFINITY;
    for (pi, phase) in phases.iter().enumerate() {
        let mut pressure = 0.0;
        for (gi, group) in obs.groups.iter().enumerate() {
            if group.iter().any(|m| phase.contains(m)) {
                pressure += obs.slots[gi];
            }
        }
        if pressure > best_pressure {
            best_pressure = pressure;
            best = pi;
        }
    }
    best
}

/// Phase serving the most approaching vehicles; ties go to the lowest index.
pub fn greedy_policy(obs: &WaveObs, spec: &IntersectionSpec, net: &NetworkModel) -> usize {
    let mut best = 0;
    let mut best_wave = f64::NEG_INFINITY;
    for (pi, phase) in spec.phases.iter().enumerate() {
        let mut served: Vec<(EdgeIdx, u32)> = phase
            .iter()
            .map(|&m| {
                let mv = net.movement(m);
                (mv.from_edge, mv.from_lane)
            })
            .collect();
        served.sort_unstable();
        served.dedup();
        let wave: f64 = obs
            .lanes
            .iter()
            .filter(|l| served.contains(&(l.edge, l.lane)))
            .map(|l| l.approaching as f64)
            .sum();
        if wave > best_wave {
            best_wave = wave;
            best = pi;
        }
    }
    best
}

/// Phase active at `t mod cycle length` under the fixed cycle.
pub fn fixed_time_policy(t: f64, cycle_s: &[f64]) -> usize {
    let total: f64 = cycle_s.iter().sum();
    debug_assert!(total > 0.0);
    let mut offset = t.rem_euclid(total);
    for (i, d) in cycle_s.iter().enumerate() {
        if offset < *d {
            return i;
        }
        offset -= d;
    }
    cycle_s.len() - 1
}

/// Uniformly random phase from the control stream.
pub fn random_policy(rng: &mut SimRng, phase_count: usize) -> usize {
    rng.uniform_int(0, phase_count as u32 - 1) as usize
}

/// Requests `target` for the next decision period. A repeated phase extends
/// the green; a switch first shows yellow to the losing movements.
pub fn apply_phase(
    state: &mut SimState,
    intersection: usize,
    target: usize,
) -> Result<(), ControlError> {
    let spec = state
        .scenario
        .net
        .intersections
        .get(intersection)
        .ok_or(ControlError::UnknownIntersection(intersection))?;
    let count = spec.phases.len();
    if target >= count {
        return Err(ControlError::InvalidPhase { got: target, count });
    }
    let yellow = spec.yellow_s.ceil() as u64;
    let now = state.clock_s;
    let sig = &mut state.signals[intersection];
    if sig.current_phase == target {
        sig.pending_phase = None;
    } else if sig.pending_phase != Some(target) {
        sig.pending_phase = Some(target);
        sig.yellow_until_s = now + yellow;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Tabular Q-learning
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AgentConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_episodes: u32,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.95,
            alpha: 0.1,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: 60,
        }
    }
}

impl AgentConfig {
    /// Linearly decayed exploration rate for an episode index.
    pub fn epsilon(&self, episode: u32) -> f64 {
        if episode >= self.epsilon_decay_episodes {
            return self.epsilon_end;
        }
        let frac = episode as f64 / self.epsilon_decay_episodes as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// One intersection's action-value table.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct QTable {
    pub q: BTreeMap<u64, Vec<f64>>,
}

impl QTable {
    fn values(&mut self, s: u64, actions: usize) -> &mut Vec<f64> {
        self.q.entry(s).or_insert_with(|| vec![0.0; actions])
    }

    pub fn best_action(&self, s: u64, actions: usize) -> usize {
        match self.q.get(&s) {
            None => 0,
            Some(vals) => {
                let mut best = 0;
                for (i, v) in vals.iter().enumerate().take(actions) {
                    if *v > vals[best] {
                        best = i;
                    }
                }
                best
            }
        }
    }

    pub fn value(&self, s: u64, a: usize) -> f64 {
        self.q.get(&s).map(|v| v[a]).unwrap_or(0.0)
    }

    /// One Q-learning backup: `Q(s,a) += alpha (r + gamma max Q(s',.) - Q(s,a))`.
    pub fn update(
        &mut self,
        s: u64,
        a: usize,
        r: f64,
        s_next: u64,
        actions: usize,
        cfg: &AgentConfig,
    ) {
        let max_next = self
            .q
            .get(&s_next)
            .map(|v| {
                v.iter()
                    .take(actions)
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .unwrap_or(0.0);
        let vals = self.values(s, actions);
        vals[a] += cfg.alpha * (r + cfg.gamma * max_next - vals[a]);
    }
}

/// Independent per-intersection learners.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QAgents {
    pub config: AgentConfig,
    pub tables: Vec<QTable>,
    pub episodes_trained: u32,
}

impl QAgents {
    pub fn new(intersections: usize, config: AgentConfig) -> Self {
        QAgents {
            config,
            tables: (0..intersections).map(|_| QTable::default()).collect(),
            episodes_trained: 0,
        }
    }

    /// Epsilon-greedy action selection from the control stream.
    pub fn select_action(
        &self,
        intersection: usize,
        s: u64,
        actions: usize,
        epsilon: f64,
        rng: &mut SimRng,
    ) -> usize {
        if rng.bernoulli(epsilon) {
            rng.uniform_int(0, actions as u32 - 1) as usize
        } else {
            self.tables[intersection].best_action(s, actions)
        }
    }
}

/// Discretizes the local state: current phase crossed with a queue bucket
/// {0, 1-2, 3-5, 6+} per incoming approach.
pub fn discretize_state(state: &SimState, intersection: usize) -> u64 {
    let net = &state.scenario.net;
    let spec = &net.intersections[intersection];
    let mut key = state.signals[intersection].current_phase as u64;
    for &edge in net.incoming_edges(spec.node) {
        let mut stopped = 0u32;
        for lane in 0..net.edge(edge).lanes {
            let (_, s, _, _) = lane_counts(state, edge, lane);
            stopped += s;
        }
        let bucket = match stopped {
            0 => 0u64,
            1..=2 => 1,
            3..=5 => 2,
            _ => 3,
        };
        key = key * 4 + bucket;
    }
    key
}
