//! Vehicles, driver profiles and the car-following rule.

use serde::{Deserialize, Serialize};

use crate::netmodel::{DriverClass, EdgeIdx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VehicleId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriverProfile {
    pub class: DriverClass,
    /// Travel-time estimation error fraction.
    pub estimation_error: f64,
}

/// Car-following parameters shared by all vehicles.
#[derive(Clone, Copy, Debug)]
pub struct CarFollowParams {
    /// Maximum acceleration, m/s^2.
    pub accel: f64,
    /// Comfortable maximum deceleration, m/s^2.
    pub decel: f64,
    /// Reaction time, seconds.
    pub tau: f64,
    /// Vehicle length, meters.
    pub length: f64,
    /// Minimum standstill gap, meters.
    pub min_gap: f64,
}

impl Default for CarFollowParams {
    fn default() -> Self {
        CarFollowParams {
            accel: 2.6,
            decel: 4.5,
            tau: 1.0,
            length: 5.0,
            min_gap: 2.5,
        }
    }
}

/// Krauss safe speed: the highest speed from which the follower can always
/// stop behind a leader that brakes at `decel` from `leader_speed`, given the
/// current `gap` and reaction time `tau`.
pub fn safe_speed(leader_speed: f64, gap: f64, decel: f64, tau: f64) -> f64 {
    let g = gap.max(0.0);
    let bt = decel * tau;
    (-bt + (bt * bt + leader_speed * leader_speed + 2.0 * decel * g).sqrt()).max(0.0)
}

/// Awareness channels, indexing [`Vehicle::aware_via`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Fti,
    Fpi,
    Os,
    Ob,
}

pub const CHANNELS: [Channel; 4] = [Channel::Fti, Channel::Fpi, Channel::Os, Channel::Ob];

#[derive(Clone, Debug)]
pub struct Vehicle {
    pub id: VehicleId,
    /// Ordered edge list; `route_idx` points at the current edge.
    pub route: Vec<EdgeIdx>,
    pub route_idx: usize,
    pub lane: u32,
    /// Position of the vehicle front along the edge, meters.
    pub offset: f64,
    pub speed: f64,
    pub profile: DriverProfile,
    /// Immobile instrumentation vehicle blocking a lane at an incident.
    pub is_ic: bool,

    pub aware: bool,
    /// Which channels latched awareness, indexed by [`Channel`].
    pub aware_via: [bool; 4],
    /// Within stopping-sight distance of an active incident ahead; switches
    /// the lane-change context weights and caps speed.
    pub within_ssd: bool,

    pub depart_s: f64,
    pub edge_entry_s: f64,
    pub waiting_s: f64,
    pub stop_count: u32,
    pub distance_m: f64,
    /// Accumulated free-flow time of every edge entered so far.
    pub realized_free_flow_s: f64,
    pub reroutes: u32,
    /// Currently inside a stop event (speed below 0.1 m/s).
    pub stopped: bool,
    stop_started_s: u64,
    /// Consecutive stopped seconds, for jam teleports.
    pub stuck_s: u32,
}

impl Vehicle {
    pub fn new(
        id: VehicleId,
        route: Vec<EdgeIdx>,
        lane: u32,
        offset: f64,
        speed: f64,
        profile: DriverProfile,
        now_s: f64,
    ) -> Self {
        Vehicle {
            id,
            route,
            route_idx: 0,
            lane,
            offset,
            speed,
            profile,
            is_ic: false,
            aware: false,
            aware_via: [false; 4],
            within_ssd: false,
            depart_s: now_s,
            edge_entry_s: now_s,
            waiting_s: 0.0,
            stop_count: 0,
            distance_m: 0.0,
            realized_free_flow_s: 0.0,
            reroutes: 0,
            stopped: false,
            stop_started_s: 0,
            stuck_s: 0,
        }
    }

    pub fn current_edge(&self) -> EdgeIdx {
        self.route[self.route_idx]
    }

    pub fn next_edge(&self) -> Option<EdgeIdx> {
        self.route.get(self.route_idx + 1).copied()
    }

    pub fn on_destination_edge(&self) -> bool {
        self.route_idx + 1 == self.route.len()
    }

    pub fn rear(&self, length: f64) -> f64 {
        self.offset - length
    }

    /// Updates stop bookkeeping for one elapsed second; returns the duration
    /// of a stop event that just completed, if any.
    pub fn tick_stop_state(&mut self, now_s: u64, is_stopped: bool) -> Option<u64> {
        if is_stopped {
            self.waiting_s += 1.0;
            self.stuck_s += 1;
            if !self.stopped {
                self.stopped = true;
                self.stop_count += 1;
                self.stop_started_s = now_s;
            }
            None
        } else {
            self.stuck_s = 0;
            if self.stopped {
                self.stopped = false;
                Some(now_s.saturating_sub(self.stop_started_s))
            } else {
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn safe_speed_examples() {
        // A stopped leader with zero gap pins the follower.
        assert_eq!(safe_speed(0.0, 0.0, 4.5, 1.0), 0.0);
        // Hand evaluation: -4.5 + sqrt(4.5^2 + 0 + 2*4.5*10) = sqrt(110.25) - 4.5.
        assert_abs_diff_eq!(safe_speed(0.0, 10.0, 4.5, 1.0), 6.0, epsilon = 1e-12);
        // Huge gaps leave the rule unbinding; the edge limit caps instead.
        assert!(safe_speed(0.0, 1e9, 4.5, 1.0) > 1000.0);
    }

    #[test]
    fn safe_speed_monotone_in_gap_and_leader_speed() {
        let mut prev = 0.0;
        for g in 0..100 {
            let v = safe_speed(5.0, g as f64, 4.5, 1.0);
            assert!(v >= prev);
            prev = v;
        }
        assert!(safe_speed(10.0, 20.0, 4.5, 1.0) > safe_speed(5.0, 20.0, 4.5, 1.0));
    }

    #[test]
    fn stop_bookkeeping_counts_events_and_durations() {
        let profile = DriverProfile {
            class: crate::netmodel::DriverClass::Experienced,
            estimation_error: 0.05,
        };
        let mut v = Vehicle::new(VehicleId(1), vec![EdgeIdx(0)], 0, 5.0, 0.0, profile, 0.0);
        assert_eq!(v.tick_stop_state(10, true), None);
        assert_eq!(v.tick_stop_state(11, true), None);
        let done = v.tick_stop_state(12, false);
        assert_eq!(done, Some(2));
        assert_eq!(v.stop_count, 1);
        assert_eq!(v.waiting_s, 2.0);
        assert_eq!(v.stuck_s, 0);
    }
}
