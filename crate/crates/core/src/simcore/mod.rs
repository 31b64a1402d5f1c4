//! Deterministic 1 s time-stepped vehicle dynamics: insertion, Krauss
//! car-following, contextual lane changing, incident deployment, ICM-driven
//! awareness and rerouting, arrival and teleportation.
//!
//! A `SimState` is single-threaded; distinct episodes (seeds) run in
//! parallel with no shared mutable state.

mod lane_change;
mod vehicle;

pub use lane_change::{
    lane_change_decide, LaneChangeWeights, LaneDecisionInput, LaneOption, LcDirection,
    DECISION_MARGIN, SPEED_GAIN_THRESHOLD,
};
pub use vehicle::{
    safe_speed, CarFollowParams, Channel, DriverProfile, Vehicle, VehicleId, CHANNELS,
};

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::behavior::{
    evaluate_reroute, p_aware, p_fpi, p_fti, p_ob, p_os, sample_next_edge, speed_adaptation_cap,
    ssd, INCIDENT_SPEED_CAP_MS,
};
use crate::incidents::{draw_incidents, Incident, IncidentConfig, IncidentError, IncidentState};
use crate::metrics::{TripLog, TripRecord};
use crate::netmodel::{DriverClass, EdgeIdx, MoveIdx, NodeIdx, Scenario};
use crate::rng::{SimRng, Stream};
use crate::routing::{cost_to_go, shortest_path, EdgeCostField, RoutingAlgo, UNREACHABLE_COST};

/// Simulation time step, seconds.
pub const DT: f64 = 1.0;

/// A vehicle moving slower than this is stopped, for every statistic and
/// observation.
pub const STOPPED_SPEED_MS: f64 = 0.1;

/// Consecutive stopped seconds before a jam teleport (never applied behind an
/// active incident).
pub const JAM_TELEPORT_S: u32 = 300;

/// Half-life of the exponentially weighted per-edge travel time average.
pub const EDGE_STAT_HALF_LIFE_S: f64 = 120.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("flow has no route from {origin} to {destination} at free flow")]
    NoRoute { origin: String, destination: String },
    #[error(transparent)]
    Incident(#[from] IncidentError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalColor {
    Green,
    Yellow,
    Red,
}

/// Per-intersection signal state. Phase switches pass through a yellow
/// interval for the movements losing their green.
#[derive(Clone, Debug)]
pub struct SignalState {
    pub current_phase: usize,
    pub pending_phase: Option<usize>,
    pub yellow_until_s: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TeleportReason {
    /// Overlapped an incident position at deployment.
    Incident,
    /// Stuck in a non-incident jam too long.
    Jam,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepEvent {
    Insertion {
        vehicle: VehicleId,
        edge: EdgeIdx,
        lane: u32,
    },
    EdgeEntered {
        vehicle: VehicleId,
        edge: EdgeIdx,
    },
    Arrival {
        vehicle: VehicleId,
        edge: EdgeIdx,
    },
    LaneChange {
        vehicle: VehicleId,
        edge: EdgeIdx,
        from_lane: u32,
        to_lane: u32,
    },
    Awareness {
        vehicle: VehicleId,
        channel: Channel,
    },
    Reroute {
        vehicle: VehicleId,
        edge: EdgeIdx,
        next: EdgeIdx,
        changed_next: bool,
    },
    RerouteFailed {
        vehicle: VehicleId,
        edge: EdgeIdx,
    },
    Teleport {
        vehicle: VehicleId,
        reason: TeleportReason,
        from_edge: EdgeIdx,
        /// `None` when no downstream slot existed and the vehicle was removed.
        to_edge: Option<EdgeIdx>,
    },
    IncidentDeployed {
        index: usize,
        edge: EdgeIdx,
    },
    IncidentCleared {
        index: usize,
        edge: EdgeIdx,
    },
}

/// Everything that happened during one step, in emission order.
#[derive(Clone, Debug, Serialize)]
pub struct StepEvents {
    pub t: u64,
    pub events: Vec<StepEvent>,
}

/// Exponentially weighted travel-time average with a fixed half-life. Both
/// the weighted sum and the weight decay together, so the ratio always
/// reflects recent traversals.
#[derive(Clone, Debug)]
struct EdgeTravelStats {
    sum: f64,
    weight: f64,
    last_s: f64,
}

impl EdgeTravelStats {
    fn new() -> Self {
        EdgeTravelStats {
            sum: 0.0,
            weight: 0.0,
            last_s: 0.0,
        }
    }

    fn decay_to(&mut self, now: f64) {
        if now > self.last_s {
            let factor = 0.5f64.powf((now - self.last_s) / EDGE_STAT_HALF_LIFE_S);
            self.sum *= factor;
            self.weight *= factor;
            self.last_s = now;
        }
    }

    fn record(&mut self, sample: f64, now: f64) {
        self.decay_to(now);
        self.sum += sample;
        self.weight += 1.0;
    }

    fn estimate(&self, now: f64) -> Option<f64> {
        let age = (now - self.last_s).max(0.0);
        let weight = self.weight * 0.5f64.powf(age / EDGE_STAT_HALF_LIFE_S);
        if weight >= 0.25 {
            Some(self.sum / self.weight)
        } else {
            None
        }
    }
}

struct PendingInsertion {
    id: VehicleId,
    route: Vec<EdgeIdx>,
    profile: DriverProfile,
}

/// The mutable world of one running episode.
pub struct SimState<'a> {
    pub scenario: &'a Scenario,
    pub params: CarFollowParams,
    /// Effective incident configuration (scenario default or CLI override).
    pub incident_cfg: IncidentConfig,
    pub clock_s: u64,

    vehicles: Vec<Option<Vehicle>>,
    /// Vehicle ids per `[edge][lane]`, front first (descending offset).
    occupancy: Vec<Vec<Vec<VehicleId>>>,
    pub signals: Vec<SignalState>,
    signal_of_node: BTreeMap<NodeIdx, usize>,
    /// Movement membership per intersection and phase.
    phase_movements: Vec<Vec<BTreeSet<MoveIdx>>>,

    edge_stats: Vec<EdgeTravelStats>,
    pub edge_volume: Vec<u64>,
    pub incidents: Vec<Incident>,
    /// VMS-equipped edges (fixed pseudo-random subset per seed).
    pub vms: Vec<bool>,
    /// Per incident, network distance in meters from every edge to the
    /// incident edge; filled at deployment.
    incident_distance: Vec<Option<Vec<f64>>>,
    mean_speed_limit: f64,

    route_cache: BTreeMap<(EdgeIdx, EdgeIdx), Vec<EdgeIdx>>,
    pending: VecDeque<PendingInsertion>,
    next_vehicle_id: u64,

    rng_demand: SimRng,
    rng_awareness: SimRng,
    rng_rerouting: SimRng,
    pub rng_control: SimRng,

    pub inserted: u64,
    pub arrived: u64,
    pub removed: u64,
    /// Vehicles created by the demand process (inserted or still queued).
    pub demand_created: u64,
    /// Created vehicles per driver class (experienced, novice, distracted,
    /// cav).
    pub demand_class_counts: [u64; 4],

    pub trip_log: TripLog,
    /// Delay accumulated at each intersection during the current and the
    /// previous decision period, for the delay-delta reward.
    delay_current: Vec<f64>,
    delay_previous: Vec<f64>,
    /// Completed stop events per `[edge][lane]`: (total duration, count).
    stop_stats: Vec<Vec<(f64, u32)>>,
}

impl<'a> SimState<'a> {
    pub fn new(
        scenario: &'a Scenario,
        master_seed: u64,
        incident_cfg: IncidentConfig,
    ) -> Result<Self, SimError> {
        let net = &scenario.net;
        let rng_demand = SimRng::from_master(master_seed, Stream::Demand);
        let mut rng_incidents = SimRng::from_master(master_seed, Stream::Incidents);
        let mut rng_awareness = SimRng::from_master(master_seed, Stream::Awareness);
        let rng_rerouting = SimRng::from_master(master_seed, Stream::Rerouting);
        let rng_control = SimRng::from_master(master_seed, Stream::Control);

        let vms: Vec<bool> = if scenario.icm.fpi.enabled {
            (0..net.edges.len())
                .map(|_| rng_awareness.bernoulli(scenario.icm.fpi.coverage))
                .collect()
        } else {
            vec![false; net.edges.len()]
        };

        let incidents = draw_incidents(
            &incident_cfg,
            net,
            scenario.sim.warmup_s,
            scenario.sim.episode_s,
            &mut rng_incidents,
        )?;

        let free_flow = EdgeCostField::free_flow(net);
        let mut route_cache = BTreeMap::new();
        for flow in &scenario.demand.flows {
            let key = (flow.origin, flow.destination);
            if route_cache.contains_key(&key) {
                continue;
            }
            let path = shortest_path(
                net,
                &free_flow,
                flow.origin,
                flow.destination,
                RoutingAlgo::Dijkstra,
            )
            .map_err(|_| SimError::NoRoute {
                origin: net.edge(flow.origin).id.clone(),
                destination: net.edge(flow.destination).id.clone(),
            })?;
            route_cache.insert(key, path);
        }

        let signals: Vec<SignalState> = net
            .intersections
            .iter()
            .map(|_| SignalState {
                current_phase: 0,
                pending_phase: None,
                yellow_until_s: 0,
            })
            .collect();
        let signal_of_node: BTreeMap<NodeIdx, usize> = net
            .intersections
            .iter()
            .enumerate()
            .map(|(i, s)| (s.node, i))
            .collect();
        let phase_movements: Vec<Vec<BTreeSet<MoveIdx>>> = net
            .intersections
            .iter()
            .map(|s| {
                s.phases
                    .iter()
                    .map(|p| p.iter().copied().collect())
                    .collect()
            })
            .collect();

        let occupancy: Vec<Vec<Vec<VehicleId>>> = net
            .edges
            .iter()
            .map(|e| vec![Vec::new(); e.lanes as usize])
            .collect();
        let stop_stats: Vec<Vec<(f64, u32)>> = net
            .edges
            .iter()
            .map(|e| vec![(0.0, 0); e.lanes as usize])
            .collect();
        let lane_count: usize = net.edges.iter().map(|e| e.lanes as usize).sum();
        let incident_count = incidents.len();
        let intersection_count = net.intersections.len();

        Ok(SimState {
            scenario,
            params: CarFollowParams::default(),
            incident_cfg,
            clock_s: 0,
            vehicles: Vec::new(),
            occupancy,
            signals,
            signal_of_node,
            phase_movements,
            edge_stats: net.edges.iter().map(|_| EdgeTravelStats::new()).collect(),
            edge_volume: vec![0; net.edges.len()],
            incidents,
            vms,
            incident_distance: vec![None; incident_count],
            mean_speed_limit: net.mean_speed_limit(),
            route_cache,
            pending: VecDeque::new(),
            next_vehicle_id: 0,
            rng_demand,
            rng_awareness,
            rng_rerouting,
            rng_control,
            inserted: 0,
            arrived: 0,
            removed: 0,
            demand_created: 0,
            demand_class_counts: [0; 4],
            trip_log: TripLog {
                warmup_s: scenario.sim.warmup_s,
                lane_count,
                ..TripLog::default()
            },
            delay_current: vec![0.0; intersection_count],
            delay_previous: vec![0.0; intersection_count],
            stop_stats,
        })
    }

    // -- accessors ----------------------------------------------------------

    pub fn vehicle(&self, id: VehicleId) -> Option<&Vehicle> {
        self.vehicles.get(id.0 as usize).and_then(|v| v.as_ref())
    }

    fn vehicle_mut(&mut self, id: VehicleId) -> &mut Vehicle {
        self.vehicles[id.0 as usize].as_mut().expect("live vehicle")
    }

    fn veh(&self, id: VehicleId) -> &Vehicle {
        self.vehicles[id.0 as usize].as_ref().expect("live vehicle")
    }

    /// Ids of all live vehicles, ascending; IC vehicles excluded unless asked.
    pub fn live_vehicles(&self, include_ic: bool) -> Vec<VehicleId> {
        self.vehicles
            .iter()
            .flatten()
            .filter(|v| include_ic || !v.is_ic)
            .map(|v| v.id)
            .collect()
    }

    pub fn in_network(&self) -> u64 {
        self.vehicles.iter().flatten().filter(|v| !v.is_ic).count() as u64
    }

    pub fn ic_vehicle_count(&self) -> u64 {
        self.vehicles.iter().flatten().filter(|v| v.is_ic).count() as u64
    }

    /// Vehicles on a lane, front (largest offset) first.
    pub fn vehicles_on_lane(&self, edge: EdgeIdx, lane: u32) -> &[VehicleId] {
        &self.occupancy[edge.usize()][lane as usize]
    }

    pub fn lane_stop_stats(&self, edge: EdgeIdx, lane: u32) -> (f64, u32) {
        self.stop_stats[edge.usize()][lane as usize]
    }

    pub fn signal_index_of(&self, node: NodeIdx) -> Option<usize> {
        self.signal_of_node.get(&node).copied()
    }

    pub fn delay_accumulators(&self, intersection: usize) -> (f64, f64) {
        (
            self.delay_previous[intersection],
            self.delay_current[intersection],
        )
    }

    /// Rotates the per-intersection delay accumulators at a decision boundary.
    pub fn rotate_delay_periods(&mut self) {
        for i in 0..self.delay_current.len() {
            self.delay_previous[i] = self.delay_current[i];
            self.delay_current[i] = 0.0;
        }
    }

    /// Signal color of a movement; unsignalized nodes are always green.
    pub fn movement_color(&self, movement: MoveIdx) -> SignalColor {
        let m = self.scenario.net.movement(movement);
        let node = self.scenario.net.edge(m.from_edge).to;
        let Some(&sig_idx) = self.signal_of_node.get(&node) else {
            return SignalColor::Green;
        };
        let sig = &self.signals[sig_idx];
        let phases = &self.phase_movements[sig_idx];
        let in_current = phases[sig.current_phase].contains(&movement);
        match sig.pending_phase {
            Some(pending) => {
                let in_pending = phases[pending].contains(&movement);
                if in_current && in_pending {
                    SignalColor::Green
                } else if in_current {
                    SignalColor::Yellow
                } else {
                    SignalColor::Red
                }
            }
            None => {
                if in_current {
                    SignalColor::Green
                } else {
                    SignalColor::Red
                }
            }
        }
    }

    /// True when an active incident blocks every lane of `edge`.
    pub fn fully_blocked(&self, edge: EdgeIdx) -> bool {
        let lanes = self.scenario.net.edge(edge).lanes as usize;
        self.incidents.iter().any(|i| {
            i.state == IncidentState::Active && i.edge == edge && i.blocked_lanes.len() >= lanes
        })
    }

    /// True when an active incident blocks `lane` downstream of `offset`.
    pub fn lane_blocked_ahead(&self, edge: EdgeIdx, lane: u32, offset: f64) -> bool {
        self.incidents.iter().any(|i| {
            i.state == IncidentState::Active
                && i.edge == edge
                && i.blocks_lane(lane)
                && i.position_m > offset
        })
    }

    fn active_incident_ahead(&self, edge: EdgeIdx, offset: f64) -> Option<&Incident> {
        self.incidents
            .iter()
            .filter(|i| i.state == IncidentState::Active && i.edge == edge && i.position_m > offset)
            .min_by(|a, b| a.position_m.partial_cmp(&b.position_m).unwrap())
    }

    fn incident_on_remaining_route(&self, veh: &Vehicle) -> bool {
        veh.route[veh.route_idx..].iter().any(|e| {
            self.incidents
                .iter()
                .any(|i| i.state == IncidentState::Active && i.edge == *e)
        })
    }

    // -- cost model ---------------------------------------------------------

    /// Estimated travel time of an edge: recent exponentially weighted mean,
    /// falling back to instantaneous length over mean speed, then free flow.
    /// Never below free flow.
    pub fn measured_cost(&self, edge: EdgeIdx) -> f64 {
        let e = self.scenario.net.edge(edge);
        let now = self.clock_s as f64;
        let base = match self.edge_stats[edge.usize()].estimate(now) {
            Some(est) => est,
            None => {
                let mut count = 0u32;
                let mut speed_sum = 0.0;
                for lane in 0..e.lanes {
                    for &id in self.vehicles_on_lane(edge, lane) {
                        let v = self.veh(id);
                        if !v.is_ic {
                            count += 1;
                            speed_sum += v.speed;
                        }
                    }
                }
                if count > 0 {
                    e.length / (speed_sum / count as f64).max(STOPPED_SPEED_MS)
                } else {
                    e.free_flow_time()
                }
            }
        };
        base.max(e.free_flow_time())
    }

    /// Driver-perceived cost field: measured costs with one multiplicative
    /// noise draw per edge (`1 + error * U(-1, 1)`), floored at free flow.
    /// Fully blocked edges are unreachable for aware drivers.
    pub fn edge_costs(&mut self, profile: &DriverProfile) -> EdgeCostField {
        let n = self.scenario.net.edges.len();
        let mut costs = Vec::with_capacity(n);
        for i in 0..n {
            let edge = EdgeIdx(i as u32);
            if self.fully_blocked(edge) {
                costs.push(UNREACHABLE_COST);
                continue;
            }
            let base = self.measured_cost(edge);
            let u = self.rng_rerouting.uniform(-1.0, 1.0);
            let noised = base * (1.0 + profile.estimation_error * u);
            costs.push(noised.max(self.scenario.net.edge(edge).free_flow_time()));
        }
        EdgeCostField::new(self.clock_s as f64, costs)
    }

    // -- step ---------------------------------------------------------------

    /// Advances the simulation by exactly one second.
    pub fn step(&mut self) -> StepEvents {
        let t = self.clock_s;
        let mut events = Vec::new();

        self.incident_transitions(t, &mut events);
        self.advance_signals(t);
        self.spawn_demand(t);
        self.attempt_insertions(t, &mut events);
        self.lane_change_pass(&mut events);
        self.movement_pass(t, &mut events);
        self.stats_pass(t, &mut events);

        debug_assert_eq!(
            self.inserted,
            self.in_network() + self.arrived + self.removed,
            "vehicle conservation at t={t}"
        );
        self.clock_s = t + 1;
        StepEvents { t, events }
    }

    fn incident_transitions(&mut self, t: u64, events: &mut Vec<StepEvent>) {
        for k in 0..self.incidents.len() {
            if self.incidents[k].state == IncidentState::Active && self.incidents[k].end_s() == t {
                self.clear_incident(k, events);
            }
        }
        for k in 0..self.incidents.len() {
            if self.incidents[k].state == IncidentState::Pending && self.incidents[k].start_s == t {
                self.deploy_incident(k, events);
            }
        }
    }

    /// Inserts the zero-speed IC vehicles for incident `k`, teleporting away
    /// anything overlapping the deployment cells.
    pub fn deploy_incident(&mut self, k: usize, events: &mut Vec<StepEvent>) {
        let (edge, position, lanes) = {
            let inc = &self.incidents[k];
            (inc.edge, inc.position_m, inc.blocked_lanes.clone())
        };
        // Active from the deployment instant so relocation bounds and
        // context rules see the blockage.
        self.incidents[k].state = IncidentState::Active;
        let len = self.params.length;
        for &lane in &lanes {
            let overlapping: Vec<VehicleId> = self
                .vehicles_on_lane(edge, lane)
                .iter()
                .copied()
                .filter(|&id| {
                    let v = self.veh(id);
                    !v.is_ic && v.offset >= position - len && v.rear(len) <= position + len
                })
                .collect();
            for id in overlapping {
                self.teleport(id, TeleportReason::Incident, events);
            }
            let ic_id = VehicleId(self.next_vehicle_id);
            self.next_vehicle_id += 1;
            let mut ic = Vehicle::new(
                ic_id,
                vec![edge],
                lane,
                position,
                0.0,
                DriverProfile {
                    class: DriverClass::Cav,
                    estimation_error: 0.0,
                },
                self.clock_s as f64,
            );
            ic.is_ic = true;
            self.vehicles.resize(self.next_vehicle_id as usize, None);
            self.vehicles[ic_id.0 as usize] = Some(ic);
            self.occupancy[edge.usize()][lane as usize].push(ic_id);
            self.sort_lane(edge, lane);
            self.incidents[k].ic_vehicles.push(ic_id);
        }
        // Distance field for the VMS channel: meters from each edge to the
        // incident edge.
        let mut meter_costs = EdgeCostField::free_flow(&self.scenario.net);
        for (i, e) in self.scenario.net.edges.iter().enumerate() {
            meter_costs.set_cost(EdgeIdx(i as u32), e.length);
        }
        let field = cost_to_go(&self.scenario.net, &meter_costs, edge);
        self.incident_distance[k] = Some(
            (0..self.scenario.net.edges.len())
                .map(|i| field.value(EdgeIdx(i as u32)))
                .collect(),
        );
        events.push(StepEvent::IncidentDeployed { index: k, edge });
    }

    /// Removes the IC vehicles; a no-op when the incident is not active.
    pub fn clear_incident(&mut self, k: usize, events: &mut Vec<StepEvent>) {
        if self.incidents[k].state != IncidentState::Active {
            return;
        }
        let edge = self.incidents[k].edge;
        let ic_ids = std::mem::take(&mut self.incidents[k].ic_vehicles);
        for id in ic_ids {
            let (e, lane) = {
                let v = self.veh(id);
                (v.current_edge(), v.lane)
            };
            self.occupancy[e.usize()][lane as usize].retain(|x| *x != id);
            self.vehicles[id.0 as usize] = None;
        }
        self.incidents[k].state = IncidentState::Cleared;
        events.push(StepEvent::IncidentCleared { index: k, edge });
    }

    fn advance_signals(&mut self, t: u64) {
        for sig in &mut self.signals {
            if sig.pending_phase.is_some() && t >= sig.yellow_until_s {
                sig.current_phase = sig.pending_phase.take().unwrap();
            }
        }
    }

    fn spawn_demand(&mut self, t: u64) {
        let tf = t as f64;
        for flow_idx in 0..self.scenario.demand.flows.len() {
            let flow = &self.scenario.demand.flows[flow_idx];
            if tf < flow.start_s || tf >= flow.end_s || flow.rate_veh_h <= 0.0 {
                continue;
            }
            let lambda = flow.rate_veh_h / 3600.0;
            let (origin, destination) = (flow.origin, flow.destination);
            let n = self.rng_demand.poisson(lambda);
            for _ in 0..n {
                let mix = &self.scenario.demand.driver_mix;
                let shares: Vec<f64> = mix.iter().map(|d| d.share).collect();
                let class_idx = self.rng_demand.weighted_index(&shares);
                let profile = DriverProfile {
                    class: mix[class_idx].class,
                    estimation_error: mix[class_idx].estimation_error,
                };
                let route = self.route_cache[&(origin, destination)].clone();
                let id = VehicleId(self.next_vehicle_id);
                self.next_vehicle_id += 1;
                self.vehicles.resize(self.next_vehicle_id as usize, None);
                self.demand_created += 1;
                self.demand_class_counts[match profile.class {
                    DriverClass::Experienced => 0,
                    DriverClass::Novice => 1,
                    DriverClass::Distracted => 2,
                    DriverClass::Cav => 3,
                }] += 1;
                self.pending
                    .push_back(PendingInsertion { id, route, profile });
            }
        }
    }

    fn attempt_insertions(&mut self, t: u64, events: &mut Vec<StepEvent>) {
        let mut blocked_origins: BTreeSet<EdgeIdx> = BTreeSet::new();
        let mut still_pending = VecDeque::new();
        while let Some(p) = self.pending.pop_front() {
            let origin = p.route[0];
            if blocked_origins.contains(&origin) {
                still_pending.push_back(p);
                continue;
            }
            match self.try_insert(t, &p) {
                Some((lane, speed)) => {
                    let mut veh = Vehicle::new(
                        p.id,
                        p.route,
                        lane,
                        self.params.length,
                        speed,
                        p.profile,
                        t as f64,
                    );
                    veh.realized_free_flow_s = self.scenario.net.edge(origin).free_flow_time();
                    if self.scenario.icm.force_aware {
                        veh.aware = true;
                    }
                    self.vehicles[p.id.0 as usize] = Some(veh);
                    self.occupancy[origin.usize()][lane as usize].push(p.id);
                    self.sort_lane(origin, lane);
                    self.inserted += 1;
                    self.edge_volume[origin.usize()] += 1;
                    events.push(StepEvent::Insertion {
                        vehicle: p.id,
                        edge: origin,
                        lane,
                    });
                    self.reroute_at_entry(p.id, events);
                }
                None => {
                    blocked_origins.insert(origin);
                    still_pending.push_back(p);
                }
            }
        }
        self.pending = still_pending;
    }

    /// Picks an entry lane with enough clearance, preferring lanes connected
    /// to the route's next edge. Returns the lane and a safe entry speed.
    fn try_insert(&mut self, _t: u64, p: &PendingInsertion) -> Option<(u32, f64)> {
        let net = &self.scenario.net;
        let origin = p.route[0];
        let e = net.edge(origin);
        let front = self.params.length;
        let connected: Vec<u32> = match p.route.get(1) {
            Some(next) => net.connecting_lanes(origin, *next),
            None => Vec::new(),
        };
        let mut order: Vec<u32> = connected.clone();
        for lane in 0..e.lanes {
            if !order.contains(&lane) {
                order.push(lane);
            }
        }
        for lane in order {
            let rearmost = self.vehicles_on_lane(origin, lane).last().copied();
            match rearmost {
                None => {
                    return Some((lane, e.speed_limit));
                }
                Some(leader_id) => {
                    let leader = self.veh(leader_id);
                    let gap = leader.rear(self.params.length) - front;
                    if gap >= self.params.min_gap {
                        let v = safe_speed(
                            leader.speed,
                            gap - self.params.min_gap,
                            self.params.decel,
                            self.params.tau,
                        )
                        .min(e.speed_limit);
                        return Some((lane, v));
                    }
                }
            }
        }
        None
    }

    fn sort_lane(&mut self, edge: EdgeIdx, lane: u32) {
        let vehicles = &self.vehicles;
        self.occupancy[edge.usize()][lane as usize].sort_by(|a, b| {
            let va = vehicles[a.0 as usize].as_ref().unwrap().offset;
            let vb = vehicles[b.0 as usize].as_ref().unwrap().offset;
            vb.partial_cmp(&va).unwrap().then_with(|| a.cmp(b))
        });
    }

    /// First vehicle ahead of `offset` on the lane (excluding `exclude`).
    fn leader_on_lane(
        &self,
        edge: EdgeIdx,
        lane: u32,
        offset: f64,
        exclude: VehicleId,
    ) -> Option<VehicleId> {
        self.vehicles_on_lane(edge, lane)
            .iter()
            .rev()
            .copied()
            .find(|&id| id != exclude && self.veh(id).offset > offset)
    }

    /// First vehicle at or behind `offset` on the lane (excluding `exclude`).
    fn follower_on_lane(
        &self,
        edge: EdgeIdx,
        lane: u32,
        offset: f64,
        exclude: VehicleId,
    ) -> Option<VehicleId> {
        self.vehicles_on_lane(edge, lane)
            .iter()
            .copied()
            .find(|&id| id != exclude && self.veh(id).offset <= offset)
    }

    // -- lane changes -------------------------------------------------------

    fn lane_change_pass(&mut self, events: &mut Vec<StepEvent>) {
        let ids = self.live_vehicles(false);
        for id in ids {
            if self.vehicle(id).is_none() {
                continue;
            }
            let decision = self.decide_lane_change(id);
            if let Some((from_lane, to_lane, edge)) = decision {
                let veh = self.vehicle_mut(id);
                veh.lane = to_lane;
                self.occupancy[edge.usize()][from_lane as usize].retain(|x| *x != id);
                self.occupancy[edge.usize()][to_lane as usize].push(id);
                self.sort_lane(edge, to_lane);
                events.push(StepEvent::LaneChange {
                    vehicle: id,
                    edge,
                    from_lane,
                    to_lane,
                });
            }
        }
    }

    fn lane_quality(&self, edge: EdgeIdx, lane: u32, offset: f64, exclude: VehicleId) -> f64 {
        let e = self.scenario.net.edge(edge);
        match self.leader_on_lane(edge, lane, offset, exclude) {
            Some(leader_id) => {
                let leader = self.veh(leader_id);
                let gap = (leader.rear(self.params.length) - offset).max(0.0);
                gap + 10.0 * leader.speed
            }
            None => (e.length - offset) + 200.0,
        }
    }

    fn lane_feasible(&self, id: VehicleId, edge: EdgeIdx, lane: u32) -> bool {
        let veh = self.veh(id);
        let p = self.params;
        if let Some(leader_id) = self.leader_on_lane(edge, lane, veh.offset, id) {
            let leader = self.veh(leader_id);
            let gap = leader.rear(p.length) - veh.offset;
            if gap <= 0.0 {
                return false;
            }
            let v_safe = safe_speed(leader.speed, (gap - p.min_gap).max(0.0), p.decel, p.tau);
            if v_safe < veh.speed - p.decel * p.tau {
                return false;
            }
        }
        if let Some(follower_id) = self.follower_on_lane(edge, lane, veh.offset, id) {
            let follower = self.veh(follower_id);
            if follower.offset >= veh.rear(p.length) {
                return false;
            }
            let gap = veh.rear(p.length) - follower.offset;
            let v_safe = safe_speed(veh.speed, (gap - p.min_gap).max(0.0), p.decel, p.tau);
            if v_safe < follower.speed - p.decel * p.tau {
                return false;
            }
        }
        true
    }

    fn lane_usable(&self, veh: &Vehicle, edge: EdgeIdx, lane: u32) -> (bool, bool) {
        let connected = match veh.next_edge() {
            None => true,
            Some(next) => self
                .scenario
                .net
                .connecting_lanes(edge, next)
                .contains(&lane),
        };
        let blocked = self.lane_blocked_ahead(edge, lane, veh.offset);
        (connected, blocked)
    }

    fn decide_lane_change(&mut self, id: VehicleId) -> Option<(u32, u32, EdgeIdx)> {
        let veh = self.veh(id);
        let edge = veh.current_edge();
        let lanes = self.scenario.net.edge(edge).lanes;
        if lanes < 2 {
            return None;
        }
        let current_lane = veh.lane;
        let offset = veh.offset;
        let within_ssd = veh.within_ssd;

        let mut options = Vec::new();
        let mut current_index = 0;
        for lane in [
            current_lane.checked_sub(1),
            Some(current_lane),
            current_lane.checked_add(1).filter(|l| *l < lanes),
        ]
        .into_iter()
        .flatten()
        {
            let veh = self.veh(id);
            let (connected, blocked) = self.lane_usable(veh, edge, lane);
            let quality = self.lane_quality(edge, lane, offset, id);
            let feasible = lane == current_lane || self.lane_feasible(id, edge, lane);
            if lane == current_lane {
                current_index = options.len();
            }
            options.push(LaneOption {
                lane,
                quality,
                feasible,
                connected,
                blocked,
            });
        }

        // A neighbor alongside whose lane is unusable presses into ours.
        let mut merge_pressure = None;
        for adjacent in [
            current_lane.checked_sub(1),
            current_lane.checked_add(1).filter(|l| *l < lanes),
        ]
        .into_iter()
        .flatten()
        {
            for &other in self.vehicles_on_lane(edge, adjacent) {
                if other == id {
                    continue;
                }
                let o = self.veh(other);
                if o.is_ic || (o.offset - offset).abs() > 10.0 {
                    continue;
                }
                let (connected, blocked) = self.lane_usable(o, edge, adjacent);
                if !connected || blocked {
                    merge_pressure = Some(if adjacent > current_lane {
                        LcDirection::Left
                    } else {
                        LcDirection::Right
                    });
                }
            }
        }

        let input = LaneDecisionInput {
            options,
            current: current_index,
            merge_pressure,
            within_ssd,
        };
        match lane_change_decide(&input) {
            LcDirection::Stay => None,
            LcDirection::Left => Some((current_lane, current_lane + 1, edge)),
            LcDirection::Right => Some((current_lane, current_lane - 1, edge)),
        }
    }

    // -- longitudinal movement ----------------------------------------------

    /// Target speed for the next second from the current snapshot.
    fn compute_speed(&self, id: VehicleId) -> f64 {
        let veh = self.veh(id);
        let net = &self.scenario.net;
        let e = net.edge(veh.current_edge());
        let p = self.params;
        let mut v = (veh.speed + p.accel * DT).min(e.speed_limit);

        // Incident speed adaptation: cap while inside the stopping sight
        // distance, until the incident position is passed.
        if veh.within_ssd {
            v = v.min(INCIDENT_SPEED_CAP_MS);
        } else if let Some(inc) = self.active_incident_ahead(veh.current_edge(), veh.offset) {
            if let Some(cap) = speed_adaptation_cap(inc.position_m - veh.offset, veh.speed) {
                v = v.min(cap);
            }
        }

        // Same-lane leader.
        if let Some(leader_id) = self.leader_on_lane(veh.current_edge(), veh.lane, veh.offset, id) {
            let leader = self.veh(leader_id);
            let gap = (leader.rear(p.length) - veh.offset - p.min_gap).max(0.0);
            v = v.min(safe_speed(leader.speed, gap, p.decel, p.tau));
        }

        // End-of-edge constraint.
        let dist_to_line = (e.length - veh.offset).max(0.0);
        match veh.next_edge() {
            None => { /* destination edge: run through the end */ }
            Some(next) => {
                let movement = net.movement_between(veh.current_edge(), veh.lane, next);
                let can_cross = movement
                    .map(|m| self.movement_color(m) == SignalColor::Green)
                    .unwrap_or(false);
                if !can_cross {
                    v = v.min(safe_speed(0.0, dist_to_line, p.decel, p.tau));
                } else if let Some(m) = movement {
                    let to_lane = net.movement(m).to_lane;
                    if let Some(rear_id) = self
                        .vehicles_on_lane(next, to_lane)
                        .last()
                        .copied()
                        .filter(|x| *x != id)
                    {
                        let rear = self.veh(rear_id);
                        let gap = (dist_to_line + rear.rear(p.length) - p.min_gap).max(0.0);
                        v = v.min(safe_speed(rear.speed, gap, p.decel, p.tau));
                    }
                }
            }
        }
        v.max(0.0)
    }

    fn movement_pass(&mut self, t: u64, events: &mut Vec<StepEvent>) {
        let ids = self.live_vehicles(false);
        let speeds: Vec<(VehicleId, f64)> =
            ids.iter().map(|&id| (id, self.compute_speed(id))).collect();
        for (id, v_new) in speeds {
            if self.vehicle(id).is_none() {
                continue;
            }
            let (edge, new_offset, is_dest) = {
                let veh = self.vehicle_mut(id);
                veh.speed = v_new;
                veh.distance_m += v_new * DT;
                (
                    veh.current_edge(),
                    veh.offset + v_new * DT,
                    veh.on_destination_edge(),
                )
            };
            let len = self.scenario.net.edge(edge).length;
            if new_offset < len {
                self.vehicle_mut(id).offset = new_offset;
            } else if is_dest {
                self.finish_trip(id, t, events);
            } else {
                self.cross_edge(id, t, new_offset - len, events);
            }
        }
        // Restore front-first ordering after all moves.
        for edge in 0..self.occupancy.len() {
            for lane in 0..self.occupancy[edge].len() {
                self.sort_lane(EdgeIdx(edge as u32), lane as u32);
            }
        }
    }

    fn finish_trip(&mut self, id: VehicleId, t: u64, events: &mut Vec<StepEvent>) {
        let veh = self.veh(id);
        let edge = veh.current_edge();
        let record = TripRecord {
            vehicle: id.0,
            depart_s: veh.depart_s,
            arrival_s: (t + 1) as f64,
            waiting_s: veh.waiting_s,
            stop_count: veh.stop_count,
            distance_m: veh.distance_m,
            free_flow_s: veh.realized_free_flow_s,
        };
        let lane = veh.lane;
        self.trip_log.trips.push(record);
        self.occupancy[edge.usize()][lane as usize].retain(|x| *x != id);
        self.vehicles[id.0 as usize] = None;
        self.arrived += 1;
        events.push(StepEvent::Arrival { vehicle: id, edge });
    }

    fn cross_edge(&mut self, id: VehicleId, t: u64, overflow: f64, events: &mut Vec<StepEvent>) {
        let net = &self.scenario.net;
        let (edge, lane, next) = {
            let veh = self.veh(id);
            (veh.current_edge(), veh.lane, veh.next_edge().unwrap())
        };
        let len = net.edge(edge).length;
        let movement = net.movement_between(edge, lane, next);
        let can_cross = movement
            .map(|m| self.movement_color(m) == SignalColor::Green)
            .unwrap_or(false);
        if !can_cross {
            // The speed rule keeps this from happening; hold at the line.
            let veh = self.vehicle_mut(id);
            veh.offset = len;
            veh.speed = 0.0;
            return;
        }
        let to_lane = net.movement(movement.unwrap()).to_lane;
        let entry_offset = overflow.min(net.edge(next).length);
        // Merge guard: two vehicles from different edges may target the same
        // lane in one step; the later (higher id) holds at the line.
        let p = self.params;
        let conflict = self.vehicles_on_lane(next, to_lane).iter().any(|&vid| {
            let v = self.veh(vid);
            v.rear(p.length) < entry_offset + p.min_gap
                && v.offset > entry_offset - p.length - p.min_gap
        });
        if conflict {
            let veh = self.vehicle_mut(id);
            veh.offset = len;
            veh.speed = 0.0;
            return;
        }
        let exit_t = (t + 1) as f64;
        let (entry_t, t_e) = {
            let veh = self.veh(id);
            let entry = veh.edge_entry_s;
            (entry, exit_t - entry)
        };
        self.edge_stats[edge.usize()].record(t_e, exit_t);
        self.evaluate_awareness(id, edge, entry_t, exit_t, t_e, events);

        let speed_cap = net.edge(next).speed_limit;
        {
            let veh = self.vehicle_mut(id);
            veh.route_idx += 1;
            veh.lane = to_lane;
            veh.offset = entry_offset;
            veh.speed = veh.speed.min(speed_cap);
            veh.edge_entry_s = exit_t;
            veh.realized_free_flow_s += net.edge(next).free_flow_time();
        }
        self.occupancy[edge.usize()][lane as usize].retain(|x| *x != id);
        self.occupancy[next.usize()][to_lane as usize].push(id);
        self.edge_volume[next.usize()] += 1;
        events.push(StepEvent::EdgeEntered {
            vehicle: id,
            edge: next,
        });
        self.reroute_at_entry(id, events);
    }

    // -- ICM ----------------------------------------------------------------

    /// One awareness evaluation at edge exit: per-channel probabilities over
    /// all active incidents, one Bernoulli draw per contributing channel,
    /// each latching its flag permanently.
    fn evaluate_awareness(
        &mut self,
        id: VehicleId,
        edge: EdgeIdx,
        entry_t: f64,
        exit_t: f64,
        t_e: f64,
        events: &mut Vec<StepEvent>,
    ) {
        if self.veh(id).aware {
            return;
        }
        let icm = &self.scenario.icm;
        if self.scenario.icm.force_aware {
            return;
        }
        let active: Vec<usize> = self
            .incidents
            .iter()
            .enumerate()
            .filter(|(_, i)| i.state == IncidentState::Active)
            .map(|(k, _)| k)
            .collect();
        if active.is_empty() {
            return;
        }
        let mut fti_miss = 1.0;
        let mut fpi_miss = 1.0;
        let mut os_miss = 1.0;
        for &k in &active {
            let inc = &self.incidents[k];
            let start = inc.start_s as f64;
            let end = inc.end_s() as f64;
            fti_miss *= 1.0 - p_fti(entry_t, t_e, start, &icm.fti);
            let distance = self.incident_distance[k]
                .as_ref()
                .map(|d| d[edge.usize()])
                .unwrap_or(UNREACHABLE_COST);
            fpi_miss *= 1.0
                - p_fpi(
                    self.vms[edge.usize()],
                    exit_t,
                    distance,
                    start,
                    end,
                    self.mean_speed_limit,
                    &icm.fpi,
                );
            os_miss *= 1.0 - p_os(entry_t, t_e, start, &icm.os);
        }
        let typical = self.scenario.net.edge(edge).free_flow_time();
        let channels = [
            1.0 - fti_miss,
            1.0 - fpi_miss,
            1.0 - os_miss,
            p_ob(t_e, typical, &icm.ob),
        ];
        debug_assert!(p_aware(&channels) <= 1.0);
        for (i, &p) in channels.iter().enumerate() {
            if p > 0.0 && self.rng_awareness.bernoulli(p) {
                let veh = self.vehicle_mut(id);
                veh.aware_via[i] = true;
                veh.aware = true;
                events.push(StepEvent::Awareness {
                    vehicle: id,
                    channel: CHANNELS[i],
                });
            }
        }
    }

    /// One rerouting evaluation at edge entry for aware vehicles: transition
    /// probabilities from congestion factors, the logit draw, and on success
    /// a replanned tail from a sampled next edge.
    fn reroute_at_entry(&mut self, id: VehicleId, events: &mut Vec<StepEvent>) {
        let veh = self.veh(id);
        if !veh.aware || veh.on_destination_edge() {
            return;
        }
        let current = veh.current_edge();
        let planned_next = veh.next_edge().unwrap();
        let destination = *veh.route.last().unwrap();
        let profile = veh.profile;
        let route_idx = veh.route_idx;
        let costs = self.edge_costs(&profile);
        let icm = &self.scenario.icm;
        let Some(eval) = evaluate_reroute(
            &self.scenario.net,
            &costs,
            current,
            planned_next,
            destination,
            icm,
        ) else {
            return;
        };
        if !self.rng_rerouting.bernoulli(eval.kappa) {
            return;
        }
        let next = sample_next_edge(&eval.probs, &mut self.rng_rerouting);
        match shortest_path(
            &self.scenario.net,
            &costs,
            next,
            destination,
            icm.routing_algo,
        ) {
            Ok(tail) => {
                let changed_next = next != planned_next;
                let veh = self.vehicle_mut(id);
                veh.route.truncate(route_idx + 1);
                veh.route.extend(tail);
                veh.reroutes += 1;
                self.trip_log.reroute_count += 1;
                events.push(StepEvent::Reroute {
                    vehicle: id,
                    edge: current,
                    next,
                    changed_next,
                });
            }
            Err(_) => {
                events.push(StepEvent::RerouteFailed {
                    vehicle: id,
                    edge: current,
                });
            }
        }
    }

    // -- scripted-scenario hooks ----------------------------------------------

    /// Inserts one vehicle outside the demand process (scripted scenarios).
    /// Returns `None` when the origin is too congested to enter.
    pub fn spawn_vehicle(
        &mut self,
        route: Vec<EdgeIdx>,
        profile: DriverProfile,
    ) -> Option<VehicleId> {
        assert!(!route.is_empty());
        let id = VehicleId(self.next_vehicle_id);
        self.next_vehicle_id += 1;
        self.vehicles.resize(self.next_vehicle_id as usize, None);
        let p = PendingInsertion { id, route, profile };
        let t = self.clock_s;
        match self.try_insert(t, &p) {
            Some((lane, speed)) => {
                let origin = p.route[0];
                let mut veh = Vehicle::new(
                    p.id,
                    p.route,
                    lane,
                    self.params.length,
                    speed,
                    p.profile,
                    t as f64,
                );
                veh.realized_free_flow_s = self.scenario.net.edge(origin).free_flow_time();
                if self.scenario.icm.force_aware {
                    veh.aware = true;
                }
                self.vehicles[id.0 as usize] = Some(veh);
                self.occupancy[origin.usize()][lane as usize].push(id);
                self.sort_lane(origin, lane);
                self.inserted += 1;
                self.edge_volume[origin.usize()] += 1;
                Some(id)
            }
            None => None,
        }
    }

    /// Test support: overrides a live vehicle's speed.
    #[doc(hidden)]
    pub fn set_vehicle_speed(&mut self, id: VehicleId, speed: f64) {
        self.vehicle_mut(id).speed = speed;
    }

    /// Test support: moves a live vehicle to an exact route position.
    #[doc(hidden)]
    pub fn place_vehicle_at(&mut self, id: VehicleId, route_idx: usize, lane: u32, offset: f64) {
        let (old_edge, old_lane) = {
            let v = self.veh(id);
            (v.current_edge(), v.lane)
        };
        self.occupancy[old_edge.usize()][old_lane as usize].retain(|x| *x != id);
        let new_edge = {
            let v = self.vehicle_mut(id);
            assert!(route_idx < v.route.len());
            v.route_idx = route_idx;
            v.lane = lane;
            v.offset = offset;
            v.current_edge()
        };
        self.occupancy[new_edge.usize()][lane as usize].push(id);
        self.sort_lane(new_edge, lane);
    }

    // -- teleports ----------------------------------------------------------

    /// Finds a clear slot for a vehicle front position on the lane at or
    /// beyond `from_pos`.
    fn find_slot(&self, edge: EdgeIdx, lane: u32, from_pos: f64) -> Option<f64> {
        let e = self.scenario.net.edge(edge);
        let p = self.params;
        // Occupants sorted rear-most first for a forward scan.
        let mut occupants: Vec<(f64, f64)> = self
            .vehicles_on_lane(edge, lane)
            .iter()
            .map(|&vid| {
                let v = self.veh(vid);
                (v.rear(p.length), v.offset)
            })
            .collect();
        occupants.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut candidate = from_pos.max(p.length);
        for (rear, front) in occupants {
            if front < candidate - p.length - p.min_gap {
                continue; // fully behind the candidate slot
            }
            if rear >= candidate + p.min_gap {
                return Some(candidate); // fits ahead of us
            }
            // Overlaps: move the candidate past this occupant.
            candidate = candidate.max(front + p.min_gap + p.length);
        }
        if candidate + p.min_gap <= e.length {
            Some(candidate)
        } else {
            None
        }
    }

    /// Relocates a vehicle to the next feasible position on its route past
    /// the obstruction, or removes it when no slot exists.
    pub fn teleport(&mut self, id: VehicleId, reason: TeleportReason, events: &mut Vec<StepEvent>) {
        let (from_edge, from_lane, offset, route, route_idx) = {
            let v = self.veh(id);
            (
                v.current_edge(),
                v.lane,
                v.offset,
                v.route.clone(),
                v.route_idx,
            )
        };
        // Lower bound on the current edge: past the nearest obstruction ahead
        // (incident cell plus margin, or just ahead of the jam position).
        let lower = match reason {
            TeleportReason::Incident => self
                .active_incident_ahead(from_edge, offset - self.params.length - 10.0)
                .map(|i| i.position_m + 2.0 * self.params.length + self.params.min_gap)
                .unwrap_or(offset + self.params.length),
            TeleportReason::Jam => offset + self.params.length + self.params.min_gap,
        };
        let net = &self.scenario.net;
        let mut target: Option<(usize, u32, f64)> = None;
        'search: for k in route_idx..route.len() {
            let edge = route[k];
            let lanes = net.edge(edge).lanes;
            let from_pos = if k == route_idx {
                lower
            } else {
                self.params.length
            };
            let lane_order: Vec<u32> = if k == route_idx {
                let mut v = vec![from_lane];
                v.extend((0..lanes).filter(|l| *l != from_lane));
                v
            } else {
                (0..lanes).collect()
            };
            for lane in lane_order {
                // Never drop a vehicle onto a blocked cell.
                if self.lane_blocked_ahead(edge, lane, from_pos - 1e-9)
                    || self.lane_blocked_ahead(edge, lane, 0.0) && k != route_idx
                {
                    continue;
                }
                if let Some(pos) = self.find_slot(edge, lane, from_pos) {
                    target = Some((k, lane, pos));
                    break 'search;
                }
            }
        }
        self.occupancy[from_edge.usize()][from_lane as usize].retain(|x| *x != id);
        self.trip_log.teleport_count += 1;
        match target {
            Some((k, lane, pos)) => {
                let skipped_ff: f64 = route[route_idx + 1..=k]
                    .iter()
                    .map(|e| net.edge(*e).free_flow_time())
                    .sum();
                let now = self.clock_s as f64;
                let edge = route[k];
                {
                    let veh = self.vehicle_mut(id);
                    veh.route_idx = k;
                    veh.lane = lane;
                    veh.offset = pos;
                    veh.speed = 0.0;
                    veh.edge_entry_s = now;
                    veh.realized_free_flow_s += skipped_ff;
                    veh.stuck_s = 0;
                }
                self.occupancy[edge.usize()][lane as usize].push(id);
                self.sort_lane(edge, lane);
                events.push(StepEvent::Teleport {
                    vehicle: id,
                    reason,
                    from_edge,
                    to_edge: Some(edge),
                });
            }
            None => {
                self.vehicles[id.0 as usize] = None;
                self.removed += 1;
                events.push(StepEvent::Teleport {
                    vehicle: id,
                    reason,
                    from_edge,
                    to_edge: None,
                });
            }
        }
    }

    // -- per-step statistics --------------------------------------------------

    fn stats_pass(&mut self, t: u64, events: &mut Vec<StepEvent>) {
        let ids = self.live_vehicles(false);
        let mut stopped_count = 0u32;
        let mut jam_teleports = Vec::new();
        for id in ids {
            let edge = self.veh(id).current_edge();
            let incident_route = {
                let veh = self.veh(id);
                self.incident_on_remaining_route(veh)
            };
            let ssd_flag = {
                let veh = self.veh(id);
                match self.active_incident_ahead(edge, veh.offset) {
                    None => false,
                    Some(inc) => {
                        veh.within_ssd || (inc.position_m - veh.offset) <= ssd(veh.speed * 3.6)
                    }
                }
            };
            let veh = self.vehicle_mut(id);
            veh.within_ssd = ssd_flag;
            let is_stopped = veh.speed < STOPPED_SPEED_MS;
            if is_stopped {
                stopped_count += 1;
            }
            let lane = veh.lane;
            if let Some(duration) = veh.tick_stop_state(t, is_stopped) {
                let entry = &mut self.stop_stats[edge.usize()][lane as usize];
                entry.0 += duration as f64;
                entry.1 += 1;
            }
            if incident_route {
                // Waiting out a blockage is legitimate; the jam clock starts
                // only once the incident is gone.
                self.vehicle_mut(id).stuck_s = 0;
            } else if self.veh(id).stuck_s >= JAM_TELEPORT_S {
                jam_teleports.push(id);
            }
        }
        for id in jam_teleports {
            self.teleport(id, TeleportReason::Jam, events);
        }
        self.trip_log.stopped_per_second.push(stopped_count);

        // Delay accumulation for the delay-delta reward: one unit per vehicle
        // second lost against the speed limit on incoming lanes.
        let net = &self.scenario.net;
        let mut delay_add = vec![0.0; self.delay_current.len()];
        for veh in self.vehicles.iter().flatten() {
            if veh.is_ic {
                continue;
            }
            let edge = veh.current_edge();
            let to_node = net.edge(edge).to;
            if let Some(&sig) = self.signal_of_node.get(&to_node) {
                let limit = net.edge(edge).speed_limit;
                delay_add[sig] += 1.0 - (veh.speed / limit).min(1.0);
            }
        }
        for (i, d) in delay_add.into_iter().enumerate() {
            self.delay_current[i] += d;
        }
    }
}
