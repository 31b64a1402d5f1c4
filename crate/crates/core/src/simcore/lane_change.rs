//! Utility-scored lane changing with incident-context weight switching.
//!
//! Four components score each candidate lane against staying put: strategic
//! necessity (route connectivity and blocked lanes), speed gain, cooperation
//! with forced mergers, and a keep-right bias. A change executes only when
//! the best candidate beats staying by a hysteresis margin and the gap checks
//! pass.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LcDirection {
    Stay,
    Left,
    Right,
}

/// Component weights (strategic, speed-gain, cooperative, keep-right).
#[derive(Clone, Copy, Debug)]
pub struct LaneChangeWeights {
    pub strategic: f64,
    pub speedgain: f64,
    pub cooperative: f64,
    pub keepright: f64,
}

impl LaneChangeWeights {
    /// Everyday driving.
    pub const DEFAULT: LaneChangeWeights = LaneChangeWeights {
        strategic: 1.0,
        speedgain: 0.5,
        cooperative: 0.5,
        keepright: 0.3,
    };
    /// Within stopping-sight distance of an incident: urgency up, lane
    /// preference suspended.
    pub const INCIDENT: LaneChangeWeights = LaneChangeWeights {
        strategic: 1.0,
        speedgain: 1.0,
        cooperative: 1.0,
        keepright: 0.0,
    };
}

/// A candidate lane can only win by more than this margin over staying.
pub const DECISION_MARGIN: f64 = 0.4;

/// Relative quality advantage needed before the speed-gain term fires.
pub const SPEED_GAIN_THRESHOLD: f64 = 0.1;

/// One lane as the deciding vehicle sees it.
#[derive(Clone, Copy, Debug)]
pub struct LaneOption {
    pub lane: u32,
    /// Free distance ahead plus a leader-speed bonus; bigger is better.
    pub quality: f64,
    /// Front and rear gaps on this lane admit a safe change.
    pub feasible: bool,
    /// The lane connects to the vehicle's next route edge (true when the
    /// vehicle is on its destination edge).
    pub connected: bool,
    /// An active incident blocks this lane downstream of the vehicle.
    pub blocked: bool,
}

#[derive(Clone, Debug)]
pub struct LaneDecisionInput {
    /// Current lane plus existing adjacent lanes.
    pub options: Vec<LaneOption>,
    /// Index of the current lane within `options`.
    pub current: usize,
    /// A neighbor signalled a forced merge into the current lane from this
    /// side; vacating toward the opposite side scores the cooperative term.
    pub merge_pressure: Option<LcDirection>,
    pub within_ssd: bool,
}

/// Scores the candidates and picks a direction. Pure; gap feasibility is
/// precomputed by the caller.
pub fn lane_change_decide(input: &LaneDecisionInput) -> LcDirection {
    let weights = if input.within_ssd {
        LaneChangeWeights::INCIDENT
    } else {
        LaneChangeWeights::DEFAULT
    };
    let current = &input.options[input.current];
    let usable_now = current.connected && !current.blocked;
    let mut best: Option<(f64, LcDirection, u32)> = None;
    for (i, opt) in input.options.iter().enumerate() {
        if i == input.current || !opt.feasible {
            continue;
        }
        let direction = if opt.lane > current.lane {
            LcDirection::Left
        } else {
            LcDirection::Right
        };
        let usable_there = opt.connected && !opt.blocked;
        let strategic = (usable_there as i32 - usable_now as i32) as f64;
        let speedgain =
            if opt.quality > (1.0 + SPEED_GAIN_THRESHOLD) * current.quality && usable_there {
                1.0
            } else {
                0.0
            };
        let cooperative = match input.merge_pressure {
            Some(side) if side != direction && usable_there => 1.0,
            _ => 0.0,
        };
        let keepright = if direction == LcDirection::Right {
            1.0
        } else {
            0.0
        };
        let score = weights.strategic * strategic
            + weights.speedgain * speedgain
            + weights.cooperative * cooperative
            + weights.keepright * keepright;
        let better = match best {
            None => true,
            Some((s, _, lane)) => score > s + 1e-12 || (score > s - 1e-12 && opt.lane < lane),
        };
        if better {
            best = Some((score, direction, opt.lane));
        }
    }
    match best {
        Some((score, direction, _)) if score > DECISION_MARGIN => direction,
        _ => LcDirection::Stay,
    }
}
