//! Result files: episodes.csv, curve CSVs, checkpoints and the manifest.
//! Everything written here is a pure function of (plan, seeds); no clocks,
//! no absolute paths.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use trex_core::experiment::{Checkpoint, EpisodeOutcome, IncidentEcho};
use trex_core::metrics::EpisodeStats;

pub const EPISODES_HEADER: &str = "scenario,seed,episode,phase,controller,avg_queue,avg_travel_time_s,avg_waiting_s,avg_delay_s,completed_trips,reroutes,teleports,inserted,arrived,removed";

/// One finished episode, tagged with everything needed to recompute any
/// metric offline.
#[derive(Clone, Debug, Serialize)]
pub struct EpisodeRow {
    pub scenario: String,
    pub seed: u64,
    pub episode: u32,
    pub phase: u8,
    pub controller: String,
    #[serde(flatten)]
    pub stats: EpisodeStats,
    pub inserted: u64,
    pub arrived: u64,
    pub removed: u64,
    pub incidents: Vec<IncidentEcho>,
}

impl EpisodeRow {
    pub fn new(
        scenario: &str,
        seed: u64,
        episode: u32,
        phase: u8,
        controller: &str,
        outcome: &EpisodeOutcome,
    ) -> Self {
        EpisodeRow {
            scenario: scenario.to_string(),
            seed,
            episode,
            phase,
            controller: controller.to_string(),
            stats: outcome.stats.clone(),
            inserted: outcome.inserted,
            arrived: outcome.arrived,
            removed: outcome.removed,
            incidents: outcome.incidents.clone(),
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{},{}",
            self.scenario,
            self.seed,
            self.episode,
            self.phase,
            self.controller,
            self.stats.avg_queue,
            self.stats.avg_travel_time_s,
            self.stats.avg_waiting_s,
            self.stats.avg_delay_s,
            self.stats.completed_trips,
            self.stats.reroute_count,
            self.stats.teleport_count,
            self.inserted,
            self.arrived,
            self.removed
        )
    }
}

pub fn write_episodes_csv(dir: &Path, rows: &[EpisodeRow]) -> Result<()> {
    let mut text = String::from(EPISODES_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row.csv_line());
        text.push('\n');
    }
    write_file(&dir.join("episodes.csv"), &text)
}

/// Curve CSV: `episode,indicator[,phase]`, directly consumable by
/// `trex metrics`.
pub fn write_curve_csv(path: &Path, points: &[(u32, f64, Option<u8>)]) -> Result<()> {
    let with_phase = points.iter().any(|(_, _, p)| p.is_some());
    let mut text = String::from(if with_phase {
        "episode,indicator,phase\n"
    } else {
        "episode,indicator\n"
    });
    for (episode, value, phase) in points {
        match phase {
            Some(p) => {
                let _ = writeln!(text, "{episode},{value:.6},{p}");
            }
            None => {
                let _ = writeln!(text, "{episode},{value:.6}");
            }
        }
    }
    write_file(path, &text)
}

/// Parses a curve CSV, tolerating the optional phase column and header.
pub fn read_curve_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read curve file {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(_episode), Some(indicator)) = (fields.next(), fields.next()) else {
            anyhow::bail!("{}:{}: expected episode,indicator", path.display(), i + 1);
        };
        match indicator.trim().parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => continue, // header
            Err(e) => anyhow::bail!("{}:{}: bad indicator: {e}", path.display(), i + 1),
        }
    }
    if values.is_empty() {
        anyhow::bail!("{}: no curve points", path.display());
    }
    Ok(values)
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let mut text = serde_json::to_string_pretty(checkpoint)?;
    text.push('\n');
    write_file(path, &text)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read checkpoint {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid checkpoint {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
