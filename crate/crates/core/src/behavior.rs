//! Driver response to incidents: the four-channel awareness model, the logit
//! rerouting decision, and stopping-sight-distance speed adaptation.
//!
//! All probability functions here are pure; the stateful per-vehicle draws
//! happen inside the owning simulation's step loop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{EdgeIdx, NetworkModel};
use crate::rng::SimRng;
use crate::routing::{cost_to_go, EdgeCostField, RoutingAlgo, UNREACHABLE_COST};

/// Speed cap while inside the stopping-sight distance of an incident
/// (5 mph, approximately 8 km/h).
pub const INCIDENT_SPEED_CAP_MS: f64 = 8.0 / 3.6;

#[derive(Debug, Error, PartialEq)]
pub enum BehaviorError {
    #[error("transition probability vector is zero")]
    ZeroVector,
    #[error("typical-route expected cost is zero")]
    ZeroDenominator,
}

/// Fixed-time information (radio broadcasts) channel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FtiConfig {
    pub enabled: bool,
    /// Market penetration of listeners.
    pub penetration: f64,
    /// Probability a listener notices the event in one broadcast.
    pub notice_prob: f64,
    /// Broadcast period; the first informative broadcast airs one period
    /// after the incident starts.
    pub period_s: f64,
}

impl Default for FtiConfig {
    fn default() -> Self {
        FtiConfig {
            enabled: true,
            penetration: 0.7,
            notice_prob: 0.5,
            period_s: 300.0,
        }
    }
}

/// Fixed-place information (variable message signs) channel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FpiConfig {
    pub enabled: bool,
    /// Fraction of edges equipped with a VMS.
    pub coverage: f64,
    /// Signs activate this long after the incident starts.
    pub activation_offset_s: f64,
    /// Effective range of a sign, meters.
    pub range_m: f64,
    /// Spatial decay exponent.
    pub decay: f64,
}

impl Default for FpiConfig {
    fn default() -> Self {
        FpiConfig {
            enabled: true,
            coverage: 0.4,
            activation_offset_s: 600.0,
            range_m: 200.0,
            decay: 2.0,
        }
    }
}

/// Online sources (social media, apps) channel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OsConfig {
    pub enabled: bool,
    pub penetration: f64,
    /// The event goes online this long after it starts.
    pub publish_offset_s: f64,
    /// Spread-rate parameter of the awareness ramp.
    pub spread_s: f64,
}

impl Default for OsConfig {
    fn default() -> Self {
        OsConfig {
            enabled: true,
            penetration: 0.8,
            publish_offset_s: 300.0,
            spread_s: 600.0,
        }
    }
}

/// Direct observation of abnormal delay.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObConfig {
    pub enabled: bool,
    /// Minimum delay before awareness can trigger, seconds.
    pub threshold_s: f64,
    /// Awareness gained per second of delay beyond the threshold.
    pub sensitivity_per_s: f64,
    /// Evaluate the literal published formula instead of the thresholded
    /// ramp; kept for comparison, see [`p_ob`].
    pub literal_formula: bool,
}

impl Default for ObConfig {
    fn default() -> Self {
        ObConfig {
            enabled: true,
            threshold_s: 120.0,
            sensitivity_per_s: 0.5 / 60.0,
            literal_formula: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IcmConfig {
    pub fti: FtiConfig,
    pub fpi: FpiConfig,
    pub os: OsConfig,
    pub ob: ObConfig,
    /// Responsiveness to the expected gain term.
    pub beta_gain: f64,
    /// Responsiveness to the avoided-loss term.
    pub beta_loss: f64,
    /// General willingness to reroute.
    pub beta_0: f64,
    pub routing_algo: RoutingAlgo,
    /// Force every vehicle aware from insertion (experiment toggle).
    #[serde(default)]
    pub force_aware: bool,
    /// Override the logit rerouting probability (experiment toggle).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_override: Option<f64>,
}

impl Default for IcmConfig {
    fn default() -> Self {
        IcmConfig {
            fti: FtiConfig::default(),
            fpi: FpiConfig::default(),
            os: OsConfig::default(),
            ob: ObConfig::default(),
            beta_gain: 2.5,
            beta_loss: 2.5,
            beta_0: -5.0,
            routing_algo: RoutingAlgo::Dijkstra,
            force_aware: false,
            kappa_override: None,
        }
    }
}

impl IcmConfig {
    /// All channels off; no vehicle can ever become aware.
    pub fn disabled() -> Self {
        let mut cfg = IcmConfig::default();
        cfg.fti.enabled = false;
        cfg.fpi.enabled = false;
        cfg.os.enabled = false;
        cfg.ob.enabled = false;
        cfg
    }

    pub fn validate(&self) -> Result<(), String> {
        let probs = [
            ("fti.penetration", self.fti.penetration),
            ("fti.notice_prob", self.fti.notice_prob),
            ("fpi.coverage", self.fpi.coverage),
            ("os.penetration", self.os.penetration),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("icm: {name} must lie in [0, 1]"));
            }
        }
        if !(self.fpi.range_m > 0.0) {
            return Err("icm: fpi.range_m must be positive".into());
        }
        if !(self.os.spread_s > 0.0) {
            return Err("icm: os.spread_s must be positive".into());
        }
        if self.ob.sensitivity_per_s < 0.0 {
            return Err("icm: ob.sensitivity_per_s must be nonnegative".into());
        }
        if !(self.fti.period_s > 0.0) {
            return Err("icm: fti.period_s must be positive".into());
        }
        if let Some(k) = self.kappa_override {
            if !(0.0..=1.0).contains(&k) {
                return Err("icm: kappa_override must lie in [0, 1]".into());
            }
        }
        Ok(())
    }
}

/// Middle value of three arguments.
fn mid(a: f64, b: f64, c: f64) -> f64 {
    a + b + c - a.min(b).min(c) - a.max(b).max(c)
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Cumulative radio-awareness probability at time `t`: penetration times the
/// chance that at least one of the broadcasts aired so far was noticed.
/// Broadcast `n` airs at `t_start + n * period`.
pub fn fti_cumulative(t: f64, incident_start: f64, cfg: &FtiConfig) -> f64 {
    if !cfg.enabled {
        return 0.0;
    }
    let aired = if t < incident_start + cfg.period_s {
        0
    } else {
        ((t - incident_start) / cfg.period_s).floor() as i64
    };
    if aired <= 0 {
        return 0.0;
    }
    cfg.penetration * (1.0 - (1.0 - cfg.notice_prob).powi(aired as i32))
}

/// Probability of becoming aware via radio while traversing an edge entered
/// at `t` with travel time `t_e`.
pub fn p_fti(t: f64, t_e: f64, incident_start: f64, cfg: &FtiConfig) -> f64 {
    clamp01(fti_cumulative(t + t_e, incident_start, cfg) - fti_cumulative(t, incident_start, cfg))
}

/// Probability of noticing a roadside sign on an edge exited at time `t`.
///
/// `distance_m` is the network distance from the edge to the incident edge;
/// the temporal term inflates it by how far (in mean-speed meters) the
/// incident lies in the past or future.
pub fn p_fpi(
    has_vms: bool,
    t: f64,
    distance_m: f64,
    incident_start: f64,
    incident_end: f64,
    mean_speed_ms: f64,
    cfg: &FpiConfig,
) -> f64 {
    if !cfg.enabled || !has_vms {
        return 0.0;
    }
    if t < incident_start + cfg.activation_offset_s {
        return 0.0;
    }
    let temporal = mid(0.0, incident_start - t, incident_end - t).abs();
    let effective = distance_m + mean_speed_ms * temporal;
    clamp01(1.0 / (1.0 + (effective / cfg.range_m).powf(cfg.decay)))
}

/// Cumulative online-awareness probability at time `t`.
pub fn os_cumulative(t: f64, incident_start: f64, cfg: &OsConfig) -> f64 {
    if !cfg.enabled {
        return 0.0;
    }
    let published = incident_start + cfg.publish_offset_s;
    if t < published {
        return 0.0;
    }
    let z = t - published;
    cfg.penetration * (1.0 - (-z * z / (2.0 * cfg.spread_s * cfg.spread_s)).exp())
}

/// Probability of becoming aware via online sources while traversing an edge
/// entered at `t` with travel time `t_e`.
pub fn p_os(t: f64, t_e: f64, incident_start: f64, cfg: &OsConfig) -> f64 {
    clamp01(os_cumulative(t + t_e, incident_start, cfg) - os_cumulative(t, incident_start, cfg))
}

/// Probability of observing abnormal conditions from the delay on an edge:
/// realized travel time `t_e` against the typical (pre-event) time.
///
/// The default form is a thresholded ramp,
/// `clamp(sensitivity * (t_e - typical - threshold), 0, 1)`. The literal
/// published form `Mid(0, 1, sensitivity * (t_e - typical)) - threshold`
/// subtracts a time from a probability and is kept only for comparison,
/// clamped into [0, 1] at the end.
pub fn p_ob(t_e: f64, typical_t_e: f64, cfg: &ObConfig) -> f64 {
    if !cfg.enabled {
        return 0.0;
    }
    if cfg.literal_formula {
        clamp01(mid(0.0, 1.0, cfg.sensitivity_per_s * (t_e - typical_t_e)) - cfg.threshold_s)
    } else {
        clamp01(cfg.sensitivity_per_s * (t_e - typical_t_e - cfg.threshold_s))
    }
}

/// Combines independent channel probabilities into the overall awareness
/// probability `1 - prod(1 - p_i)`.
pub fn p_aware(channels: &[f64]) -> f64 {
    clamp01(
        1.0 - channels
            .iter()
            .fold(1.0, |acc, p| acc * (1.0 - clamp01(*p))),
    )
}

/// Actual and typical transition probability vectors over the outgoing edges
/// of the vehicle's current edge.
#[derive(Clone, Debug)]
pub struct TransitionProbs {
    pub successors: Vec<EdgeIdx>,
    pub actual: Vec<f64>,
    pub typical: Vec<f64>,
}

/// Builds transition probabilities from cost-to-go values: the actual vector
/// weights each successor by the inverse of its cost to destination (zero for
/// unreachable successors), the typical vector is concentrated on the planned
/// next edge.
pub fn transition_probs(
    successors: &[EdgeIdx],
    w_values: &[f64],
    planned_next: EdgeIdx,
) -> TransitionProbs {
    debug_assert_eq!(successors.len(), w_values.len());
    let mut weights: Vec<f64> = w_values
        .iter()
        .map(|&w| {
            if w >= UNREACHABLE_COST {
                0.0
            } else {
                1.0 / w.max(1e-9)
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        weights = vec![1.0 / successors.len() as f64; successors.len()];
    } else {
        for w in &mut weights {
            *w /= total;
        }
    }
    let typical: Vec<f64> = successors
        .iter()
        .map(|&e| if e == planned_next { 1.0 } else { 0.0 })
        .collect();
    TransitionProbs {
        successors: successors.to_vec(),
        actual: weights,
        typical,
    }
}

/// Expected gain: one minus the cosine similarity of the actual and typical
/// transition probability vectors.
pub fn expected_gain(probs: &TransitionProbs) -> Result<f64, BehaviorError> {
    let dot: f64 = probs
        .actual
        .iter()
        .zip(&probs.typical)
        .map(|(a, b)| a * b)
        .sum();
    let na: f64 = probs.actual.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb: f64 = probs.typical.iter().map(|b| b * b).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(BehaviorError::ZeroVector);
    }
    Ok(1.0 - dot / (na * nb))
}

/// Avoided loss: relative difference between the expected cost-to-go under
/// the actual and the typical transition probabilities.
pub fn avoided_loss(probs: &TransitionProbs, w_values: &[f64]) -> Result<f64, BehaviorError> {
    debug_assert_eq!(probs.successors.len(), w_values.len());
    let actual: f64 = probs.actual.iter().zip(w_values).map(|(p, w)| p * w).sum();
    let typical: f64 = probs.typical.iter().zip(w_values).map(|(p, w)| p * w).sum();
    if typical <= 0.0 {
        return Err(BehaviorError::ZeroDenominator);
    }
    Ok((actual - typical) / typical)
}

/// Logit rerouting probability from the gain and loss terms.
pub fn reroute_probability(delta_p: f64, delta_w: f64, cfg: &IcmConfig) -> f64 {
    let utility = cfg.beta_gain * delta_p + cfg.beta_loss * delta_w + cfg.beta_0;
    1.0 / (1.0 + (-utility).exp())
}

/// Stopping sight distance in meters for a speed in km/h: perception-reaction
/// distance at a 2.5 s reaction time plus braking distance at 3.4 m/s^2.
pub fn ssd(speed_kmh: f64) -> f64 {
    0.278 * speed_kmh * 2.5 + 0.039 * speed_kmh * speed_kmh / 3.4
}

/// Speed adaptation near an incident: once the distance to the incident ahead
/// drops inside the stopping sight distance of the current speed, the vehicle
/// caps at [`INCIDENT_SPEED_CAP_MS`]. `None` outside the trigger radius.
pub fn speed_adaptation_cap(distance_to_incident_m: f64, speed_ms: f64) -> Option<f64> {
    if distance_to_incident_m <= ssd(speed_ms * 3.6) {
        Some(INCIDENT_SPEED_CAP_MS)
    } else {
        None
    }
}

/// One rerouting evaluation at edge entry.
#[derive(Clone, Debug)]
pub struct RerouteEval {
    pub probs: TransitionProbs,
    /// Cost-to-go of each successor, capped at [`UNREACHABLE_COST`].
    pub w_values: Vec<f64>,
    pub delta_p: f64,
    pub delta_w: f64,
    pub kappa: f64,
}

/// Computes the rerouting decision quantities for a vehicle entering
/// `current` with `planned_next` on its route toward `destination`.
/// Returns `None` when the current edge has no successors.
pub fn evaluate_reroute(
    net: &NetworkModel,
    costs: &EdgeCostField,
    current: EdgeIdx,
    planned_next: EdgeIdx,
    destination: EdgeIdx,
    cfg: &IcmConfig,
) -> Option<RerouteEval> {
    let successors = net.successors(current);
    if successors.is_empty() {
        return None;
    }
    let w = cost_to_go(net, costs, destination);
    let w_values: Vec<f64> = successors
        .iter()
        .map(|&e| w.value(e).min(UNREACHABLE_COST))
        .collect();
    let probs = transition_probs(successors, &w_values, planned_next);
    let delta_p = expected_gain(&probs).unwrap_or(0.0);
    let delta_w = avoided_loss(&probs, &w_values).unwrap_or(0.0);
    let kappa = cfg
        .kappa_override
        .unwrap_or_else(|| reroute_probability(delta_p, delta_w, cfg));
    Some(RerouteEval {
        probs,
        w_values,
        delta_p,
        delta_w,
        kappa,
    })
}

/// Samples the next edge from the actual transition distribution.
pub fn sample_next_edge(probs: &TransitionProbs, rng: &mut SimRng) -> EdgeIdx {
    let idx = rng.weighted_index(&probs.actual);
    probs.successors[idx]
}
