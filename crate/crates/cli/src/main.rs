//! `trex` — batch entry point: scenario generation, episode runs, training,
//! zero-shot evaluation, transfer experiments and metric reports. Every
//! output is reproducible from (scenario, seed).

mod outputs;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use trex_core::control::{AgentConfig, ObsKind, RewardKind};
use trex_core::experiment::{
    eval_checkpoint, run_episode, train, transfer, Checkpoint, ControllerKind, EpisodeConfig,
};
use trex_core::incidents::{FixedIncident, IncidentConfig, IncidentMode};
use trex_core::metrics;
use trex_core::netmodel::{
    corridor_scenario, diamond_scenario, grid_scenario, load_scenario, save_scenario, Scenario,
};

use outputs::{
    load_checkpoint, read_curve_csv, save_checkpoint, write_curve_csv, write_episodes_csv,
    write_file, write_json, EpisodeRow,
};

#[derive(Parser)]
#[command(
    name = "trex",
    version,
    about = "Incident-aware traffic simulation and signal-control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario file.
    Gen(GenArgs),
    /// Simulate episodes under a fixed controller and write KPI rows.
    Run(RunArgs),
    /// Train the tabular Q-learning controller.
    Train(TrainArgs),
    /// Evaluate a frozen checkpoint (optionally the 4-combination matrix).
    Eval(EvalArgs),
    /// Two-phase transfer: pre-train, then continue training elsewhere.
    Transfer(TransferArgs),
    /// Robustness metrics over a learning-curve CSV.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
}

#[derive(Subcommand)]
enum GenKind {
    /// Orthogonal grid of signalized intersections.
    Grid {
        #[arg(long, default_value_t = 2)]
        rows: u32,
        #[arg(long, default_value_t = 2)]
        cols: u32,
        #[arg(long, default_value_t = 150.0)]
        edge_length: f64,
        #[arg(long, default_value_t = 1)]
        lanes: u32,
        #[arg(long, default_value_t = 13.89)]
        speed: f64,
        /// Border-to-border through demand per flow, veh/h.
        #[arg(long, default_value_t = 300.0)]
        demand: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// One-directional corridor without signals.
    Corridor {
        #[arg(long, default_value_t = 4)]
        segments: u32,
        #[arg(long, default_value_t = 300.0)]
        edge_length: f64,
        #[arg(long, default_value_t = 1)]
        lanes: u32,
        #[arg(long, default_value_t = 13.89)]
        speed: f64,
        #[arg(long, default_value_t = 600.0)]
        demand: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two parallel routes between a split and a merge.
    Diamond {
        #[arg(long, default_value_t = 600.0)]
        demand: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SeedArgs {
    /// Master seeds, comma separated (alias: --seed).
    #[arg(
        long = "seeds",
        visible_alias = "seed",
        value_delimiter = ',',
        default_value = "1,2,3,4,5"
    )]
    seeds: Vec<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    seeds: SeedArgs,
    #[arg(long, default_value_t = 1)]
    episodes: u32,
    #[arg(long, default_value = "fixed", value_parser = parse_controller)]
    controller: ControllerKind,
    #[arg(long, default_value = "queue-wait", value_parser = parse_reward)]
    reward: RewardKind,
    /// on, off, or a path to a JSON incident list.
    #[arg(long, default_value = "off")]
    incidents: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write per-step event logs (JSON lines) per episode.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    seeds: SeedArgs,
    #[arg(long, default_value_t = 100)]
    episodes: u32,
    #[arg(long, default_value = "queue-wait", value_parser = parse_reward)]
    reward: RewardKind,
    #[arg(long, default_value = "lane-feature", value_parser = parse_obs)]
    obs: ObsKind,
    #[arg(long, default_value = "off")]
    incidents: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_start: f64,
    #[arg(long, default_value_t = 0.05)]
    eps_end: f64,
    #[arg(long, default_value_t = 60)]
    eps_decay_episodes: u32,
}

#[derive(Args)]
struct EvalArgs {
    /// Single-combination mode.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "off")]
    incidents: String,
    /// Matrix mode: the four train/test combinations.
    #[arg(long)]
    base_scenario: Option<PathBuf>,
    #[arg(long)]
    incident_scenario: Option<PathBuf>,
    #[arg(long)]
    base_checkpoint: Option<PathBuf>,
    #[arg(long)]
    incident_checkpoint: Option<PathBuf>,
    #[command(flatten)]
    seeds: SeedArgs,
    #[arg(long, default_value_t = 10)]
    episodes: u32,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct TransferArgs {
    /// Phase-1 scenario (and phase-2 unless --scenario2 is given).
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    scenario2: Option<PathBuf>,
    /// Incident toggle for phase 1.
    #[arg(long, default_value = "off")]
    incidents1: String,
    /// Incident toggle for phase 2.
    #[arg(long, default_value = "on")]
    incidents2: String,
    #[command(flatten)]
    seeds: SeedArgs,
    /// Episodes per phase.
    #[arg(long, default_value_t = 50)]
    episodes: u32,
    #[arg(long, default_value = "queue-wait", value_parser = parse_reward)]
    reward: RewardKind,
    #[arg(long, default_value = "lane-feature", value_parser = parse_obs)]
    obs: ObsKind,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    curve: PathBuf,
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Relative stability band for the convergence rate.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_controller(s: &str) -> Result<ControllerKind, String> {
    s.parse()
}

fn parse_reward(s: &str) -> Result<RewardKind, String> {
    match s {
        "delay-delta" => Ok(RewardKind::DelayDelta),
        "neg-pressure" => Ok(RewardKind::NegPressure),
        "queue-wait" => Ok(RewardKind::QueueWait),
        other => Err(format!(
            "unknown reward {other}; expected delay-delta|neg-pressure|queue-wait"
        )),
    }
}

fn parse_obs(s: &str) -> Result<ObsKind, String> {
    match s {
        "lane-feature" => Ok(ObsKind::LaneFeature),
        "pressure" => Ok(ObsKind::Pressure),
        "wave" => Ok(ObsKind::Wave),
        "region" => Ok(ObsKind::Region),
        other => Err(format!(
            "unknown observation {other}; expected lane-feature|pressure|wave|region"
        )),
    }
}

fn controller_name(c: ControllerKind) -> &'static str {
    match c {
        ControllerKind::Fixed => "fixed",
        ControllerKind::Random => "random",
        ControllerKind::MaxPressure => "max-pressure",
        ControllerKind::Greedy => "greedy",
        ControllerKind::Qlearn => "qlearn",
    }
}

/// Incident list file: a JSON array of explicit incidents.
#[derive(Deserialize)]
struct IncidentFileEntry {
    edge: String,
    position_m: f64,
    lanes_blocked: u32,
    start_s: f64,
    duration_s: f64,
}

/// Resolves the --incidents argument: `off`, `on` (scenario config, or two
/// random incidents when the scenario has none), or a JSON file path.
fn resolve_incidents(scenario: &Scenario, arg: &str) -> Result<IncidentConfig> {
    match arg {
        "off" => Ok(IncidentConfig::none()),
        "on" => Ok(match scenario.incidents.mode {
            IncidentMode::None => IncidentConfig::default_random(),
            _ => scenario.incidents.clone(),
        }),
        path => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read incident file {path}"))?;
            let entries: Vec<IncidentFileEntry> = serde_json::from_str(&text)
                .with_context(|| format!("invalid incident file {path}"))?;
            let mut fixed = Vec::new();
            for e in entries {
                let edge = scenario
                    .net
                    .edge_idx(&e.edge)
                    .with_context(|| format!("incident file references unknown edge {}", e.edge))?;
                fixed.push(FixedIncident {
                    edge,
                    position_m: e.position_m,
                    lanes_blocked: e.lanes_blocked,
                    start_s: e.start_s,
                    duration_s: e.duration_s,
                });
            }
            Ok(IncidentConfig {
                mode: IncidentMode::Fixed,
                fixed,
                ..IncidentConfig::none()
            })
        }
    }
}

fn episode_seed(seed: u64, episode: u32) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(episode as u64)
}

/// Runs one closure per seed on its own thread, preserving seed order in the
/// returned vector.
fn per_seed<T: Send>(seeds: &[u64], f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let mut slots: Vec<Option<Result<T>>> = seeds.iter().map(|_| None).collect();
    std::thread::scope(|scope| {
        for (slot, &seed) in slots.iter_mut().zip(seeds) {
            let f = &f;
            scope.spawn(move || {
                *slot = Some(f(seed));
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("seed worker finished"))
        .collect()
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Transfer(args) => cmd_transfer(args),
        Command::Metrics(args) => cmd_metrics(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let (scenario, out) = match args.kind {
        GenKind::Grid {
            rows,
            cols,
            edge_length,
            lanes,
            speed,
            demand,
            out,
        } => (
            grid_scenario(rows, cols, edge_length, lanes, speed, demand)
                .map_err(anyhow::Error::msg)?,
            out,
        ),
        GenKind::Corridor {
            segments,
            edge_length,
            lanes,
            speed,
            demand,
            out,
        } => (
            corridor_scenario(segments, edge_length, lanes, speed, demand)
                .map_err(anyhow::Error::msg)?,
            out,
        ),
        GenKind::Diamond { demand, out } => {
            (diamond_scenario(demand).map_err(anyhow::Error::msg)?, out)
        }
    };
    write_file(&out, &save_scenario(&scenario))?;
    println!("wrote scenario {} to {}", scenario.id, out.display());
    Ok(())
}

fn load(path: &Path) -> Result<Scenario> {
    load_scenario(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    if args.controller == ControllerKind::Qlearn {
        bail!("the learning controller is driven by `trex train` / `trex eval`");
    }
    let scenario = load(&args.scenario)?;
    let incident_cfg = resolve_incidents(&scenario, &args.incidents)?;
    let results = per_seed(&args.seeds.seeds, |seed| {
        let mut outcomes = Vec::new();
        for ep in 0..args.episodes {
            let cfg = EpisodeConfig {
                scenario: &scenario,
                seed: episode_seed(seed, ep),
                controller: args.controller,
                reward: args.reward,
                incident_cfg: incident_cfg.clone(),
                collect_trace: args.trace,
            };
            outcomes.push(run_episode(&cfg, None, 0.0, false)?);
        }
        Ok(outcomes)
    })?;

    let mut rows = Vec::new();
    let mut drawn = BTreeMap::new();
    for (seed, outcomes) in args.seeds.seeds.iter().zip(&results) {
        for (ep, outcome) in outcomes.iter().enumerate() {
            rows.push(EpisodeRow::new(
                &scenario.id,
                *seed,
                ep as u32,
                1,
                controller_name(args.controller),
                outcome,
            ));
            if args.trace {
                if let Some(trace) = &outcome.trace {
                    let mut text = String::new();
                    for step in trace {
                        text.push_str(&serde_json::to_string(step)?);
                        text.push('\n');
                    }
                    write_file(&args.out.join(format!("trace_s{seed}_e{ep}.jsonl")), &text)?;
                }
            }
        }
        drawn.insert(
            seed.to_string(),
            outcomes
                .iter()
                .map(|o| o.incidents.clone())
                .collect::<Vec<_>>(),
        );
    }
    write_episodes_csv(&args.out, &rows)?;
    write_json(
        &args.out.join("manifest.json"),
        &json!({
            "command": "run",
            "scenario_id": scenario.id,
            "scenario_path": args.scenario.to_string_lossy(),
            "seeds": args.seeds.seeds,
            "episodes": args.episodes,
            "controller": controller_name(args.controller),
            "incidents": args.incidents,
            "drawn_incidents": drawn,
        }),
    )?;
    println!(
        "wrote {} episode rows to {}",
        rows.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let scenario = load(&args.scenario)?;
    let incident_cfg = resolve_incidents(&scenario, &args.incidents)?;
    let agent_config = AgentConfig {
        gamma: args.gamma,
        alpha: args.alpha,
        epsilon_start: args.eps_start,
        epsilon_end: args.eps_end,
        epsilon_decay_episodes: args.eps_decay_episodes,
    };
    let results = per_seed(&args.seeds.seeds, |seed| {
        Ok(train(
            &scenario,
            seed,
            args.episodes,
            args.reward,
            args.obs,
            &incident_cfg,
            agent_config.clone(),
            None,
        )?)
    })?;

    let mut rows = Vec::new();
    let mut drawn = BTreeMap::new();
    for (seed, result) in args.seeds.seeds.iter().zip(&results) {
        for (ep, outcome) in result.episodes.iter().enumerate() {
            rows.push(EpisodeRow::new(
                &scenario.id,
                *seed,
                ep as u32,
                1,
                "qlearn",
                outcome,
            ));
        }
        let points: Vec<(u32, f64, Option<u8>)> = result
            .curve
            .iter()
            .enumerate()
            .map(|(i, v)| (i as u32, *v, None))
            .collect();
        write_curve_csv(&args.out.join(format!("curve_s{seed}.csv")), &points)?;
        save_checkpoint(
            &args.out.join(format!("checkpoint_best_s{seed}.json")),
            &result.best,
        )?;
        save_checkpoint(
            &args.out.join(format!("checkpoint_final_s{seed}.json")),
            &result.last,
        )?;
        drawn.insert(
            seed.to_string(),
            result
                .episodes
                .iter()
                .map(|o| o.incidents.clone())
                .collect::<Vec<_>>(),
        );
    }
    write_episodes_csv(&args.out, &rows)?;
    write_json(
        &args.out.join("manifest.json"),
        &json!({
            "command": "train",
            "scenario_id": scenario.id,
            "scenario_path": args.scenario.to_string_lossy(),
            "seeds": args.seeds.seeds,
            "episodes": args.episodes,
            "controller": "qlearn",
            "reward": args.reward,
            "obs": args.obs,
            "incidents": args.incidents,
            "agent": agent_config,
            "drawn_incidents": drawn,
        }),
    )?;
    for (seed, result) in args.seeds.seeds.iter().zip(&results) {
        println!(
            "seed {seed}: best 10-episode window {:.2}, final window {:.2}",
            result.best.train_indicator, result.last.train_indicator
        );
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let matrix_mode = args.base_scenario.is_some()
        || args.incident_scenario.is_some()
        || args.base_checkpoint.is_some()
        || args.incident_checkpoint.is_some();
    if matrix_mode {
        return cmd_eval_matrix(args);
    }
    let (Some(scenario_path), Some(checkpoint_path)) = (&args.scenario, &args.checkpoint) else {
        bail!("eval needs --scenario and --checkpoint (or the full matrix flags)");
    };
    let scenario = load(scenario_path)?;
    let checkpoint = load_checkpoint(checkpoint_path)?;
    checkpoint
        .compatible_with(&scenario)
        .map_err(anyhow::Error::msg)?;
    let incident_cfg = resolve_incidents(&scenario, &args.incidents)?;
    let results = per_seed(&args.seeds.seeds, |seed| {
        Ok(eval_checkpoint(
            &scenario,
            &checkpoint,
            seed,
            args.episodes,
            &incident_cfg,
        )?)
    })?;
    let mut rows = Vec::new();
    for (seed, outcomes) in args.seeds.seeds.iter().zip(&results) {
        for (ep, outcome) in outcomes.iter().enumerate() {
            rows.push(EpisodeRow::new(
                &scenario.id,
                *seed,
                ep as u32,
                1,
                "qlearn",
                outcome,
            ));
        }
    }
    write_episodes_csv(&args.out, &rows)?;
    let mean: f64 = rows.iter().map(|r| r.stats.avg_travel_time_s).sum::<f64>() / rows.len() as f64;
    write_json(
        &args.out.join("manifest.json"),
        &json!({
            "command": "eval",
            "scenario_id": scenario.id,
            "checkpoint": checkpoint_path.to_string_lossy(),
            "train_indicator": checkpoint.train_indicator,
            "test_indicator_mean": mean,
            "seeds": args.seeds.seeds,
            "episodes": args.episodes,
            "incidents": args.incidents,
        }),
    )?;
    println!(
        "eval mean travel time {mean:.2} s over {} episodes",
        rows.len()
    );
    Ok(())
}

fn cmd_eval_matrix(args: EvalArgs) -> Result<()> {
    let (Some(base_sc), Some(inc_sc), Some(base_ck), Some(inc_ck)) = (
        &args.base_scenario,
        &args.incident_scenario,
        &args.base_checkpoint,
        &args.incident_checkpoint,
    ) else {
        bail!("matrix eval needs --base-scenario, --incident-scenario, --base-checkpoint and --incident-checkpoint");
    };
    let base_scenario = load(base_sc)?;
    let incident_scenario = load(inc_sc)?;
    let base_checkpoint = load_checkpoint(base_ck)?;
    let incident_checkpoint = load_checkpoint(inc_ck)?;
    base_checkpoint
        .compatible_with(&base_scenario)
        .map_err(anyhow::Error::msg)?;
    incident_checkpoint
        .compatible_with(&incident_scenario)
        .map_err(anyhow::Error::msg)?;

    struct Combo<'a> {
        name: &'a str,
        checkpoint: &'a Checkpoint,
        scenario: &'a Scenario,
        incidents: &'a str,
    }
    let combos = [
        Combo {
            name: "base-base",
            checkpoint: &base_checkpoint,
            scenario: &base_scenario,
            incidents: "off",
        },
        Combo {
            name: "base-incident",
            checkpoint: &base_checkpoint,
            scenario: &incident_scenario,
            incidents: "on",
        },
        Combo {
            name: "incident-incident",
            checkpoint: &incident_checkpoint,
            scenario: &incident_scenario,
            incidents: "on",
        },
        Combo {
            name: "incident-base",
            checkpoint: &incident_checkpoint,
            scenario: &base_scenario,
            incidents: "off",
        },
    ];

    let mut rows = Vec::new();
    let mut table = Vec::new();
    for combo in &combos {
        let incident_cfg = resolve_incidents(combo.scenario, combo.incidents)?;
        let results = per_seed(&args.seeds.seeds, |seed| {
            Ok(eval_checkpoint(
                combo.scenario,
                combo.checkpoint,
                seed,
                args.episodes,
                &incident_cfg,
            )?)
        })?;
        let mut values = Vec::new();
        for (seed, outcomes) in args.seeds.seeds.iter().zip(&results) {
            for (ep, outcome) in outcomes.iter().enumerate() {
                values.push(outcome.stats.avg_travel_time_s);
                rows.push(EpisodeRow::new(
                    &format!("{}/{}", combo.name, combo.scenario.id),
                    *seed,
                    ep as u32,
                    1,
                    "qlearn",
                    outcome,
                ));
            }
        }
        let test_indicator = values.iter().sum::<f64>() / values.len() as f64;
        let pdi = metrics::pdi(combo.checkpoint.train_indicator, test_indicator)
            .map_err(|e| anyhow::Error::msg(e.to_string()))?;
        table.push(json!({
            "combo": combo.name,
            "train_indicator": combo.checkpoint.train_indicator,
            "test_indicator": test_indicator,
            "pdi": pdi,
        }));
    }
    write_episodes_csv(&args.out, &rows)?;
    write_json(
        &args.out.join("pdi.json"),
        &json!({ "episodes": args.episodes, "seeds": args.seeds.seeds, "combos": table }),
    )?;
    for entry in &table {
        println!(
            "{}: train {:.2}, test {:.2}, PDI {:.3}",
            entry["combo"].as_str().unwrap(),
            entry["train_indicator"].as_f64().unwrap(),
            entry["test_indicator"].as_f64().unwrap(),
            entry["pdi"].as_f64().unwrap()
        );
    }
    Ok(())
}

fn cmd_transfer(args: TransferArgs) -> Result<()> {
    let scenario1 = load(&args.scenario)?;
    let scenario2 = match &args.scenario2 {
        Some(p) => load(p)?,
        None => scenario1.clone(),
    };
    let incidents1 = resolve_incidents(&scenario1, &args.incidents1)?;
    let incidents2 = resolve_incidents(&scenario2, &args.incidents2)?;
    let results = per_seed(&args.seeds.seeds, |seed| {
        Ok(transfer(
            &scenario1,
            &incidents1,
            &scenario2,
            &incidents2,
            seed,
            args.episodes,
            args.reward,
            args.obs,
            AgentConfig::default(),
        )?)
    })?;
    let mut rows = Vec::new();
    for (seed, result) in args.seeds.seeds.iter().zip(&results) {
        let points: Vec<(u32, f64, Option<u8>)> = result
            .curve
            .iter()
            .map(|(ep, v, phase)| (*ep, *v, Some(*phase)))
            .collect();
        write_curve_csv(&args.out.join(format!("curve_s{seed}.csv")), &points)?;
        for (phase, train_result, id) in [
            (1u8, &result.phase1, &scenario1.id),
            (2u8, &result.phase2, &scenario2.id),
        ] {
            for (ep, outcome) in train_result.episodes.iter().enumerate() {
                rows.push(EpisodeRow::new(
                    id, *seed, ep as u32, phase, "qlearn", outcome,
                ));
            }
        }
    }
    write_episodes_csv(&args.out, &rows)?;
    write_json(
        &args.out.join("manifest.json"),
        &json!({
            "command": "transfer",
            "phase1_scenario": scenario1.id,
            "phase2_scenario": scenario2.id,
            "incidents1": args.incidents1,
            "incidents2": args.incidents2,
            "seeds": args.seeds.seeds,
            "episodes_per_phase": args.episodes,
            "reward": args.reward,
            "obs": args.obs,
        }),
    )?;
    println!(
        "transfer complete: {} seeds x 2 x {} episodes",
        args.seeds.seeds.len(),
        args.episodes
    );
    Ok(())
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    let curve = read_curve_csv(&args.curve)?;
    let lsi = metrics::lsi(&curve).map_err(|e| anyhow::Error::msg(e.to_string()))?;
    let fpd = metrics::fpd(&curve).map_err(|e| anyhow::Error::msg(e.to_string()))?;
    let cr = metrics::cr(&curve, args.epsilon);
    let auc = metrics::auc(&curve);
    let rauc = match &args.baseline {
        Some(path) => {
            let base = read_curve_csv(path)?;
            Some(metrics::rauc(&base, &curve).map_err(|e| anyhow::Error::msg(e.to_string()))?)
        }
        None => None,
    };
    let report = json!({
        "points": curve.len(),
        "epsilon": args.epsilon,
        "lsi": lsi,
        "fpd": fpd,
        "cr": cr,
        "auc": auc,
        "rauc": rauc,
    });
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
