//! Episode KPIs and robustness metrics over learning curves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("curve needs at least two points")]
    CurveTooShort,
    #[error("best value on the curve is zero")]
    ZeroBest,
    #[error("baseline curve has zero area")]
    ZeroBaseArea,
    #[error("training performance is zero")]
    ZeroTrainPerformance,
    #[error("trip log holds no completed post-warm-up trips")]
    EmptyTripLog,
}

/// One completed (arrived) vehicle trip.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TripRecord {
    pub vehicle: u64,
    pub depart_s: f64,
    pub arrival_s: f64,
    pub waiting_s: f64,
    pub stop_count: u32,
    pub distance_m: f64,
    /// Free-flow time of the route the vehicle actually drove.
    pub free_flow_s: f64,
}

/// Everything an episode leaves behind for KPI computation. IC vehicles are
/// never recorded here.
#[derive(Clone, Debug, Default)]
pub struct TripLog {
    pub trips: Vec<TripRecord>,
    /// Total stopped (< 0.1 m/s) vehicle count sampled once per second,
    /// index = simulation second.
    pub stopped_per_second: Vec<u32>,
    pub lane_count: usize,
    pub warmup_s: f64,
    pub reroute_count: u32,
    pub teleport_count: u32,
}

/// Per-episode performance indicators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeStats {
    /// Mean stopped vehicles per lane per second, post warm-up.
    pub avg_queue: f64,
    pub avg_travel_time_s: f64,
    pub avg_waiting_s: f64,
    /// Travel time minus free-flow time of the realized route, averaged.
    pub avg_delay_s: f64,
    pub completed_trips: u32,
    pub reroute_count: u32,
    pub teleport_count: u32,
}

impl EpisodeStats {
    pub fn zeros() -> Self {
        EpisodeStats {
            avg_queue: 0.0,
            avg_travel_time_s: 0.0,
            avg_waiting_s: 0.0,
            avg_delay_s: 0.0,
            completed_trips: 0,
            reroute_count: 0,
            teleport_count: 0,
        }
    }
}

/// Aggregates a trip log into episode KPIs. Only vehicles that departed after
/// warm-up count; queue averaging likewise starts after warm-up.
pub fn episode_kpis(log: &TripLog) -> Result<EpisodeStats, MetricsError> {
    let trips: Vec<&TripRecord> = log
        .trips
        .iter()
        .filter(|t| t.depart_s >= log.warmup_s)
        .collect();
    if trips.is_empty() {
        return Err(MetricsError::EmptyTripLog);
    }
    let n = trips.len() as f64;
    let avg_travel_time_s = trips.iter().map(|t| t.arrival_s - t.depart_s).sum::<f64>() / n;
    let avg_waiting_s = trips.iter().map(|t| t.waiting_s).sum::<f64>() / n;
    let avg_delay_s = trips
        .iter()
        .map(|t| (t.arrival_s - t.depart_s) - t.free_flow_s)
        .sum::<f64>()
        / n;
    let post_warmup: Vec<u32> = log
        .stopped_per_second
        .iter()
        .enumerate()
        .filter(|(sec, _)| *sec as f64 >= log.warmup_s)
        .map(|(_, c)| *c)
        .collect();
    let avg_queue = if post_warmup.is_empty() || log.lane_count == 0 {
        0.0
    } else {
        post_warmup.iter().map(|c| *c as f64).sum::<f64>()
            / (post_warmup.len() as f64 * log.lane_count as f64)
    };
    Ok(EpisodeStats {
        avg_queue,
        avg_travel_time_s,
        avg_waiting_s,
        avg_delay_s,
        completed_trips: trips.len() as u32,
        reroute_count: log.reroute_count,
        teleport_count: log.teleport_count,
    })
}

/// Learning stability index: mean squared episode-to-episode change.
pub fn lsi(curve: &[f64]) -> Result<f64, MetricsError> {
    if curve.len() < 2 {
        return Err(MetricsError::CurveTooShort);
    }
    let t = (curve.len() - 1) as f64;
    Ok(curve.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / t)
}

/// Final performance deviation: |final - best| / best, best being the curve
/// minimum (all indicators here are lower-is-better).
pub fn fpd(curve: &[f64]) -> Result<f64, MetricsError> {
    if curve.is_empty() {
        return Err(MetricsError::CurveTooShort);
    }
    let best = curve.iter().copied().fold(f64::INFINITY, f64::min);
    if best == 0.0 {
        return Err(MetricsError::ZeroBest);
    }
    let last = *curve.last().unwrap();
    Ok((last - best).abs() / best)
}

/// Convergence rate: +-1/T_c signed by whether the curve improved, 0 when it
/// ends where it started. T_c is the earliest episode after which the curve
/// stays within `epsilon * |final|` of the final value (clamped to at least 1
/// so the rate stays finite; T if never stable before the end).
pub fn cr(curve: &[f64], epsilon: f64) -> f64 {
    if curve.len() < 2 {
        return 0.0;
    }
    let last = *curve.last().unwrap();
    let first = curve[0];
    if last == first {
        return 0.0;
    }
    let band = epsilon * last.abs();
    let mut t_c = curve.len() - 1;
    for start in (0..curve.len()).rev() {
        if (curve[start] - last).abs() <= band {
            t_c = start;
        } else {
            break;
        }
    }
    let t_c = t_c.max(1) as f64;
    if last < first {
        1.0 / t_c
    } else {
        -1.0 / t_c
    }
}

/// Area under the learning curve by the trapezoidal rule at unit episode
/// spacing.
pub fn auc(curve: &[f64]) -> f64 {
    curve.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum()
}

/// Relative AUC difference between a perturbed and a base curve.
pub fn rauc(base: &[f64], perturbed: &[f64]) -> Result<f64, MetricsError> {
    let base_auc = auc(base);
    if base_auc == 0.0 {
        return Err(MetricsError::ZeroBaseArea);
    }
    Ok((auc(perturbed) - base_auc) / base_auc)
}

/// Performance degradation index between training and testing environments.
pub fn pdi(train_performance: f64, test_performance: f64) -> Result<f64, MetricsError> {
    if train_performance == 0.0 {
        return Err(MetricsError::ZeroTrainPerformance);
    }
    Ok((test_performance - train_performance) / train_performance)
}
