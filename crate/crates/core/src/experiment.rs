//! Episode and experiment engines: single episode runs, training loops with
//! checkpointing, frozen-policy evaluation, and two-phase transfer runs.
//! All outputs are reproducible from (scenario, seed).

use serde::{Deserialize, Serialize};

use crate::control::{
    apply_phase, build_pressure, build_wave, compute_reward, discretize_state, fixed_time_policy,
    greedy_policy, max_pressure_policy, random_policy, AgentConfig, ObsKind, QAgents, RewardKind,
};
use crate::incidents::IncidentConfig;
use crate::metrics::{episode_kpis, EpisodeStats};
use crate::netmodel::Scenario;
use crate::simcore::{SimError, SimState, StepEvents};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Fixed,
    Random,
    MaxPressure,
    Greedy,
    Qlearn,
}

impl ControllerKind {
    pub fn is_learning(self) -> bool {
        self == ControllerKind::Qlearn
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(ControllerKind::Fixed),
            "random" => Ok(ControllerKind::Random),
            "max-pressure" => Ok(ControllerKind::MaxPressure),
            "greedy" => Ok(ControllerKind::Greedy),
            "qlearn" => Ok(ControllerKind::Qlearn),
            other => Err(format!(
                "unknown controller {other}; expected fixed|random|max-pressure|greedy|qlearn"
            )),
        }
    }
}

/// Echo of a drawn incident for result manifests.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncidentEcho {
    pub edge: String,
    pub position_m: f64,
    pub blocked_lanes: Vec<u32>,
    pub start_s: u64,
    pub duration_s: u64,
}

#[derive(Clone, Debug)]
pub struct EpisodeConfig<'s> {
    pub scenario: &'s Scenario,
    pub seed: u64,
    pub controller: ControllerKind,
    pub reward: RewardKind,
    pub incident_cfg: IncidentConfig,
    pub collect_trace: bool,
}

#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub stats: EpisodeStats,
    pub incidents: Vec<IncidentEcho>,
    pub inserted: u64,
    pub arrived: u64,
    pub removed: u64,
    pub trace: Option<Vec<StepEvents>>,
}

/// Simulates one full episode: controllers act every decision period, the
/// world advances in 1 s steps, KPIs exclude the warm-up.
///
/// For the learning controller, `agents` supplies the tables; `epsilon` the
/// exploration rate; `learn` whether Q-updates run.
pub fn run_episode(
    cfg: &EpisodeConfig,
    mut agents: Option<&mut QAgents>,
    epsilon: f64,
    learn: bool,
) -> Result<EpisodeOutcome, SimError> {
    let scenario = cfg.scenario;
    let mut state = SimState::new(scenario, cfg.seed, cfg.incident_cfg.clone())?;
    let horizon = scenario.sim.episode_s as u64;
    let period = scenario.sim.decision_period_s as u64;
    let n_int = scenario.net.intersections.len();
    let agent_config = agents
        .as_deref()
        .map(|a| a.config.clone())
        .unwrap_or_default();
    let mut prev_sa: Vec<Option<(u64, usize)>> = vec![None; n_int];
    let mut trace = if cfg.collect_trace {
        Some(Vec::new())
    } else {
        None
    };

    for t in 0..horizon {
        if t % period == 0 {
            for i in 0..n_int {
                let phases = scenario.net.intersections[i].phases.len();
                let s = discretize_state(&state, i);
                if cfg.controller == ControllerKind::Qlearn {
                    if let (true, Some(agents), Some((ps, pa))) =
                        (learn, agents.as_deref_mut(), prev_sa[i])
                    {
                        let r = compute_reward(&state, i, cfg.reward).expect("valid intersection");
                        agents.tables[i].update(ps, pa, r, s, phases, &agent_config);
                    }
                }
                let action = match cfg.controller {
                    ControllerKind::Fixed => {
                        fixed_time_policy(t as f64, &scenario.net.intersections[i].fixed_cycle_s)
                    }
                    ControllerKind::Random => random_policy(&mut state.rng_control, phases),
                    ControllerKind::MaxPressure => {
                        let obs = build_pressure(&state, i).expect("valid intersection");
                        max_pressure_policy(&obs, &scenario.net.intersections[i].phases)
                    }
                    ControllerKind::Greedy => {
                        let obs = build_wave(&state, i).expect("valid intersection");
                        greedy_policy(&obs, &scenario.net.intersections[i], &scenario.net)
                    }
                    ControllerKind::Qlearn => {
                        let agents_ref = agents.as_deref().expect("qlearn needs agents");
                        agents_ref.select_action(i, s, phases, epsilon, &mut state.rng_control)
                    }
                };
                apply_phase(&mut state, i, action).expect("valid phase");
                prev_sa[i] = Some((s, action));
            }
            state.rotate_delay_periods();
        }
        let events = state.step();
        if let Some(trace) = trace.as_mut() {
            trace.push(events);
        }
    }
    // Terminal backup for the last decision period.
    if cfg.controller == ControllerKind::Qlearn && learn {
        if let Some(agents) = agents.as_deref_mut() {
            for i in 0..n_int {
                if let Some((ps, pa)) = prev_sa[i] {
                    let phases = scenario.net.intersections[i].phases.len();
                    let s = discretize_state(&state, i);
                    let r = compute_reward(&state, i, cfg.reward).expect("valid intersection");
                    agents.tables[i].update(ps, pa, r, s, phases, &agent_config);
                }
            }
        }
    }

    let stats = episode_kpis(&state.trip_log).unwrap_or_else(|_| EpisodeStats::zeros());
    let incidents = state
        .incidents
        .iter()
        .map(|inc| IncidentEcho {
            edge: scenario.net.edge(inc.edge).id.clone(),
            position_m: inc.position_m,
            blocked_lanes: inc.blocked_lanes.clone(),
            start_s: inc.start_s,
            duration_s: inc.duration_s,
        })
        .collect();
    Ok(EpisodeOutcome {
        stats,
        incidents,
        inserted: state.inserted,
        arrived: state.arrived,
        removed: state.removed,
        trace,
    })
}

/// A trained policy plus the metadata needed to evaluate it elsewhere.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub scenario_id: String,
    /// Node ids of the signalized intersections, in order.
    pub intersections: Vec<String>,
    pub reward: RewardKind,
    pub obs: ObsKind,
    pub agents: QAgents,
    /// Mean indicator over the best 10 consecutive training episodes.
    pub train_indicator: f64,
    pub episodes: u32,
}

impl Checkpoint {
    pub fn compatible_with(&self, scenario: &Scenario) -> Result<(), String> {
        let nodes: Vec<String> = scenario
            .net
            .intersections
            .iter()
            .map(|i| scenario.net.node(i.node).id.clone())
            .collect();
        if nodes != self.intersections {
            return Err(format!(
                "checkpoint intersections {:?} do not match scenario {:?}",
                self.intersections, nodes
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    pub curve: Vec<f64>,
    pub episodes: Vec<EpisodeOutcome>,
    pub best: Checkpoint,
    pub last: Checkpoint,
}

/// Size of the consecutive-episode window used to select the best
/// checkpoint.
pub const BEST_WINDOW: usize = 10;

fn make_checkpoint(
    scenario: &Scenario,
    agents: &QAgents,
    reward: RewardKind,
    obs: ObsKind,
    train_indicator: f64,
) -> Checkpoint {
    Checkpoint {
        scenario_id: scenario.id.clone(),
        intersections: scenario
            .net
            .intersections
            .iter()
            .map(|i| scenario.net.node(i.node).id.clone())
            .collect(),
        reward,
        obs,
        agents: agents.clone(),
        train_indicator,
        episodes: agents.episodes_trained,
    }
}

/// Trains the tabular agents for `episodes` episodes on one scenario,
/// continuing from `agents` when supplied (transfer). Checkpoints are taken
/// at the best 10-consecutive-episode window and at the final episode.
#[allow(clippy::too_many_arguments)]
pub fn train(
    scenario: &Scenario,
    seed: u64,
    episodes: u32,
    reward: RewardKind,
    obs: ObsKind,
    incident_cfg: &IncidentConfig,
    agent_config: AgentConfig,
    agents: Option<QAgents>,
) -> Result<TrainResult, SimError> {
    let mut agents =
        agents.unwrap_or_else(|| QAgents::new(scenario.net.intersections.len(), agent_config));
    let mut curve = Vec::with_capacity(episodes as usize);
    let mut episode_outcomes = Vec::with_capacity(episodes as usize);
    let mut best: Option<(f64, Checkpoint)> = None;
    for _ep in 0..episodes {
        let epsilon = agents.config.epsilon(agents.episodes_trained);
        let cfg = EpisodeConfig {
            scenario,
            // One derived seed per episode so arrivals differ across episodes
            // but the whole run stays a function of (scenario, seed).
            seed: seed
                .wrapping_mul(1_000_003)
                .wrapping_add(agents.episodes_trained as u64),
            controller: ControllerKind::Qlearn,
            reward,
            incident_cfg: incident_cfg.clone(),
            collect_trace: false,
        };
        let outcome = run_episode(&cfg, Some(&mut agents), epsilon, true)?;
        agents.episodes_trained += 1;
        curve.push(outcome.stats.avg_travel_time_s);
        episode_outcomes.push(outcome);
        if curve.len() >= BEST_WINDOW {
            let window = &curve[curve.len() - BEST_WINDOW..];
            let mean = window.iter().sum::<f64>() / BEST_WINDOW as f64;
            if best.as_ref().map(|(m, _)| mean < *m).unwrap_or(true) {
                best = Some((mean, make_checkpoint(scenario, &agents, reward, obs, mean)));
            }
        }
    }
    let final_indicator = if curve.len() >= BEST_WINDOW {
        curve[curve.len() - BEST_WINDOW..].iter().sum::<f64>() / BEST_WINDOW as f64
    } else {
        curve.iter().sum::<f64>() / curve.len().max(1) as f64
    };
    let last = make_checkpoint(scenario, &agents, reward, obs, final_indicator);
    let best = best.map(|(_, c)| c).unwrap_or_else(|| last.clone());
    Ok(TrainResult {
        curve,
        episodes: episode_outcomes,
        best,
        last,
    })
}

/// Evaluates a frozen checkpoint: exploration off, no updates.
pub fn eval_checkpoint(
    scenario: &Scenario,
    checkpoint: &Checkpoint,
    seed: u64,
    episodes: u32,
    incident_cfg: &IncidentConfig,
) -> Result<Vec<EpisodeOutcome>, SimError> {
    let mut agents = checkpoint.agents.clone();
    let mut outcomes = Vec::with_capacity(episodes as usize);
    for ep in 0..episodes {
        let cfg = EpisodeConfig {
            scenario,
            seed: seed.wrapping_mul(1_000_003).wrapping_add(ep as u64),
            controller: ControllerKind::Qlearn,
            reward: checkpoint.reward,
            incident_cfg: incident_cfg.clone(),
            collect_trace: false,
        };
        outcomes.push(run_episode(&cfg, Some(&mut agents), 0.0, false)?);
    }
    Ok(outcomes)
}

#[derive(Clone, Debug)]
pub struct TransferResult {
    /// (episode index, indicator, phase) with phase 1 before transfer.
    pub curve: Vec<(u32, f64, u8)>,
    pub phase1: TrainResult,
    pub phase2: TrainResult,
}

/// Two-phase transfer: train in the first scenario, then continue training
/// (tables and exploration schedule preserved) in the second.
#[allow(clippy::too_many_arguments)]
pub fn transfer(
    phase1_scenario: &Scenario,
    phase1_incidents: &IncidentConfig,
    phase2_scenario: &Scenario,
    phase2_incidents: &IncidentConfig,
    seed: u64,
    episodes_per_phase: u32,
    reward: RewardKind,
    obs: ObsKind,
    agent_config: AgentConfig,
) -> Result<TransferResult, SimError> {
    let phase1 = train(
        phase1_scenario,
        seed,
        episodes_per_phase,
        reward,
        obs,
        phase1_incidents,
        agent_config.clone(),
        None,
    )?;
    let phase2 = train(
        phase2_scenario,
        seed,
        episodes_per_phase,
        reward,
        obs,
        phase2_incidents,
        agent_config,
        Some(phase1.last.agents.clone()),
    )?;
    let mut curve = Vec::new();
    for (i, v) in phase1.curve.iter().enumerate() {
        curve.push((i as u32, *v, 1u8));
    }
    for (i, v) in phase2.curve.iter().enumerate() {
        curve.push((phase1.curve.len() as u32 + i as u32, *v, 2u8));
    }
    Ok(TransferResult {
        curve,
        phase1,
        phase2,
    })
}
