//! Cross-module invariants exercised over full episodes.

use trex_core::behavior::IcmConfig;
use trex_core::control::{
    apply_phase, build_observation, compute_reward, random_policy, ObsKind, RewardKind,
};
use trex_core::experiment::{run_episode, train, ControllerKind, EpisodeConfig};
use trex_core::incidents::{FixedIncident, IncidentConfig, IncidentMode};
use trex_core::netmodel::{diamond_scenario, grid_scenario, MoveIdx, Scenario};
use trex_core::simcore::{SignalColor, SimState};

fn grid_with_incidents() -> Scenario {
    let mut scenario = grid_scenario(2, 2, 150.0, 1, 13.89, 300.0).unwrap();
    scenario.incidents = IncidentConfig::default_random();
    scenario
}

/// No two conflicting movements are ever green (or green/yellow) together,
/// over a full episode under the most switch-happy controller.
#[test]
fn phase_safety_over_full_episode() {
    let scenario = grid_with_incidents();
    let mut state = SimState::new(&scenario, 5, scenario.incidents.clone()).unwrap();
    let period = scenario.sim.decision_period_s as u64;
    for t in 0..3600u64 {
        if t % period == 0 {
            for i in 0..scenario.net.intersections.len() {
                let phases = scenario.net.intersections[i].phases.len();
                let target = random_policy(&mut state.rng_control, phases);
                apply_phase(&mut state, i, target).unwrap();
            }
            state.rotate_delay_periods();
        }
        state.step();
        for spec in &scenario.net.intersections {
            let moves = scenario.net.movements_at_node(spec.node);
            let lit: Vec<MoveIdx> = moves
                .iter()
                .copied()
                .filter(|&m| state.movement_color(m) != SignalColor::Red)
                .collect();
            for (i, &a) in lit.iter().enumerate() {
                for &b in &lit[i + 1..] {
                    assert!(
                        !scenario.net.conflicting(a, b),
                        "t={t}: conflicting movements {a:?} and {b:?} both lit"
                    );
                }
            }
        }
    }
}

/// Replanned routes stay connected and keep their destination.
#[test]
fn replanned_routes_stay_connected() {
    let mut scenario = diamond_scenario(600.0).unwrap();
    scenario.icm.force_aware = true;
    scenario.icm.kappa_override = Some(1.0);
    let primary = scenario.net.edge_idx("primary").unwrap();
    let incident_cfg = IncidentConfig {
        mode: IncidentMode::Fixed,
        fixed: vec![FixedIncident {
            edge: primary,
            position_m: 75.0,
            lanes_blocked: 1,
            start_s: 150.0,
            duration_s: 3000.0,
        }],
        ..IncidentConfig::none()
    };
    let mut state = SimState::new(&scenario, 3, incident_cfg).unwrap();
    let destination = scenario.net.edge_idx("out").unwrap();
    for _ in 0..1800 {
        state.step();
        for id in state.live_vehicles(false) {
            let v = state.vehicle(id).unwrap();
            assert_eq!(
                *v.route.last().unwrap(),
                destination,
                "destination preserved"
            );
            for pair in v.route[v.route_idx..].windows(2) {
                assert!(
                    scenario.net.successors(pair[0]).contains(&pair[1]),
                    "route disconnected at {:?} -> {:?}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }
    assert!(
        state.trip_log.reroute_count > 0,
        "forced kappa must cause replans"
    );
}

/// Awareness latches: once aware, a vehicle stays aware for its whole trip.
#[test]
fn awareness_is_absorbing_over_an_episode() {
    let scenario = grid_with_incidents();
    let mut state = SimState::new(&scenario, 23, scenario.incidents.clone()).unwrap();
    let mut ever_aware = std::collections::BTreeSet::new();
    let mut any_awareness = false;
    for _ in 0..3600 {
        state.step();
        for id in state.live_vehicles(false) {
            let v = state.vehicle(id).unwrap();
            if v.aware {
                ever_aware.insert(id);
                any_awareness = true;
            } else {
                assert!(!ever_aware.contains(&id), "vehicle {id:?} lost awareness");
            }
        }
    }
    assert!(
        any_awareness,
        "some vehicle becomes aware under active incidents"
    );
}

/// The environment loop produces exactly one (observe, act, reward,
/// next-observe) tuple per agent per decision period, and identical seeds
/// yield identical trajectories.
#[test]
fn environment_loop_contract() {
    let scenario = grid_with_incidents();
    let run = |seed: u64| -> (u64, Vec<f64>) {
        let mut state = SimState::new(&scenario, seed, scenario.incidents.clone()).unwrap();
        let period = scenario.sim.decision_period_s as u64;
        let horizon = 600u64;
        let n = scenario.net.intersections.len();
        let mut tuples = 0u64;
        let mut rewards = Vec::new();
        for t in 0..horizon {
            if t % period == 0 {
                for i in 0..n {
                    let obs = build_observation(&state, i, ObsKind::Pressure).unwrap();
                    let r = compute_reward(&state, i, RewardKind::QueueWait).unwrap();
                    let phases = scenario.net.intersections[i].phases.len();
                    let a = random_policy(&mut state.rng_control, phases);
                    apply_phase(&mut state, i, a).unwrap();
                    let _ = obs;
                    rewards.push(r);
                    tuples += 1;
                }
                state.rotate_delay_periods();
            }
            state.step();
        }
        assert_eq!(tuples, (horizon / period) * n as u64);
        (tuples, rewards)
    };
    let (t1, r1) = run(9);
    let (t2, r2) = run(9);
    assert_eq!(t1, t2);
    assert_eq!(r1, r2);
}

/// Training twice with the same seed reproduces the learning curve exactly.
#[test]
fn training_is_reproducible() {
    let scenario = grid_scenario(1, 1, 150.0, 1, 13.89, 300.0).unwrap();
    let cfg = IncidentConfig::none();
    let a = train(
        &scenario,
        7,
        5,
        RewardKind::QueueWait,
        ObsKind::LaneFeature,
        &cfg,
        Default::default(),
        None,
    )
    .unwrap();
    let b = train(
        &scenario,
        7,
        5,
        RewardKind::QueueWait,
        ObsKind::LaneFeature,
        &cfg,
        Default::default(),
        None,
    )
    .unwrap();
    assert_eq!(a.curve, b.curve);
}

/// With every ICM channel disabled no vehicle ever reroutes, even under a
/// full blockage.
#[test]
fn disabled_channels_never_reroute() {
    let mut scenario = diamond_scenario(600.0).unwrap();
    scenario.icm = IcmConfig::disabled();
    let primary = scenario.net.edge_idx("primary").unwrap();
    let incident_cfg = IncidentConfig {
        mode: IncidentMode::Fixed,
        fixed: vec![FixedIncident {
            edge: primary,
            position_m: 75.0,
            lanes_blocked: 1,
            start_s: 150.0,
            duration_s: 3000.0,
        }],
        ..IncidentConfig::none()
    };
    let cfg = EpisodeConfig {
        scenario: &scenario,
        seed: 4242,
        controller: ControllerKind::Fixed,
        reward: RewardKind::QueueWait,
        incident_cfg,
        collect_trace: false,
    };
    let outcome = run_episode(&cfg, None, 0.0, false).unwrap();
    assert_eq!(outcome.stats.reroute_count, 0);
}

/// A multi-lane grid with incidents runs a full episode without violating
/// conservation, producing lane changes along the way.
#[test]
fn multi_lane_incident_episode_smoke() {
    let mut scenario = grid_scenario(2, 2, 150.0, 2, 13.89, 400.0).unwrap();
    scenario.incidents = IncidentConfig::default_random();
    let mut state = SimState::new(&scenario, 31, scenario.incidents.clone()).unwrap();
    let period = scenario.sim.decision_period_s as u64;
    let mut lane_changes = 0u32;
    for t in 0..3600u64 {
        if t % period == 0 {
            for i in 0..scenario.net.intersections.len() {
                let target = trex_core::control::fixed_time_policy(
                    t as f64,
                    &scenario.net.intersections[i].fixed_cycle_s,
                );
                apply_phase(&mut state, i, target).unwrap();
            }
            state.rotate_delay_periods();
        }
        let events = state.step();
        lane_changes += events
            .events
            .iter()
            .filter(|e| matches!(e, trex_core::simcore::StepEvent::LaneChange { .. }))
            .count() as u32;
        assert_eq!(state.inserted, state.in_network() + state.arrived + state.removed);
    }
    assert!(state.arrived > 500, "episode should complete trips");
    assert!(lane_changes > 0, "multi-lane traffic should change lanes");
}

/// Replanning stays well-formed under each configured routing algorithm.
#[test]
fn replans_work_under_all_routing_algorithms() {
    for algo in [
        trex_core::routing::RoutingAlgo::Dijkstra,
        trex_core::routing::RoutingAlgo::Astar,
        trex_core::routing::RoutingAlgo::Greedy,
    ] {
        let mut scenario = diamond_scenario(600.0).unwrap();
        scenario.icm.force_aware = true;
        scenario.icm.kappa_override = Some(1.0);
        scenario.icm.routing_algo = algo;
        let primary = scenario.net.edge_idx("primary").unwrap();
        let incident_cfg = IncidentConfig {
            mode: IncidentMode::Fixed,
            fixed: vec![FixedIncident {
                edge: primary,
                position_m: 75.0,
                lanes_blocked: 1,
                start_s: 150.0,
                duration_s: 3000.0,
            }],
            ..IncidentConfig::none()
        };
        let mut state = SimState::new(&scenario, 8, incident_cfg).unwrap();
        let destination = scenario.net.edge_idx("out").unwrap();
        for _ in 0..900 {
            state.step();
            for id in state.live_vehicles(false) {
                let v = state.vehicle(id).unwrap();
                assert_eq!(*v.route.last().unwrap(), destination);
                for pair in v.route[v.route_idx..].windows(2) {
                    assert!(scenario.net.successors(pair[0]).contains(&pair[1]), "{algo:?}");
                }
            }
        }
        assert!(state.trip_log.reroute_count > 0, "{algo:?} must replan");
        assert!(state.arrived > 0, "{algo:?} traffic keeps flowing");
    }
}

/// The literal direct-observation formula stays a probability and never
/// brings the episode down.
#[test]
fn literal_observation_formula_runs_clean() {
    let mut scenario = grid_scenario(2, 2, 150.0, 1, 13.89, 300.0).unwrap();
    scenario.icm.ob.literal_formula = true;
    scenario.incidents = IncidentConfig::default_random();
    let mut state = SimState::new(&scenario, 3, scenario.incidents.clone()).unwrap();
    for _ in 0..1800 {
        state.step();
    }
    assert_eq!(state.inserted, state.in_network() + state.arrived + state.removed);
}
