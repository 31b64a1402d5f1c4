//! Seeded RNG streams.
//!
//! Every stochastic concern of a run (demand, incidents, awareness,
//! rerouting, control) draws from its own stream derived from the master
//! seed, so toggling one concern never perturbs the realizations of the
//! others. All streams are ChaCha8, which is stable across platforms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stochastic concerns that own a dedicated stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    /// Vehicle arrivals and driver-class assignment.
    Demand,
    /// Incident parameter sampling.
    Incidents,
    /// Awareness Bernoulli draws (and VMS edge assignment at setup).
    Awareness,
    /// Reroute decisions, next-edge sampling and cost-noise draws.
    Rerouting,
    /// Random baseline and epsilon-greedy exploration.
    Control,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Demand => 0x44454d44,
            Stream::Incidents => 0x494e4344,
            Stream::Awareness => 0x41574152,
            Stream::Rerouting => 0x5252544f,
            Stream::Control => 0x43545254,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// A deterministic stream of draws for one concern.
#[derive(Clone, Debug)]
pub struct SimRng {
    rng: ChaCha8Rng,
}

impl SimRng {
    /// Derives the stream for `stream` from the master seed.
    pub fn from_master(master_seed: u64, stream: Stream) -> Self {
        let seed = splitmix64(master_seed ^ splitmix64(stream.tag()));
        SimRng {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform01(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo <= hi);
        lo + (hi - lo) * self.uniform01()
    }

    /// Uniform integer in `[lo, hi]` (inclusive).
    pub fn uniform_int(&mut self, lo: u32, hi: u32) -> u32 {
        debug_assert!(lo <= hi);
        self.rng.random_range(lo..=hi)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform01() < p
    }

    /// Exponential with the given mean (inverse-CDF transform).
    pub fn exponential(&mut self, mean: f64) -> f64 {
        debug_assert!(mean > 0.0);
        let u = self.uniform01();
        -mean * (1.0 - u).ln()
    }

    /// Poisson count via Knuth's product-of-uniforms method (fine for the
    /// per-second arrival intensities used here, lambda well below 30).
    pub fn poisson(&mut self, lambda: f64) -> u32 {
        debug_assert!(lambda >= 0.0);
        if lambda == 0.0 {
            return 0;
        }
        let limit = (-lambda).exp();
        let mut count = 0u32;
        let mut product = self.uniform01();
        while product > limit {
            count += 1;
            product *= self.uniform01();
        }
        count
    }

    /// Samples an index proportionally to `weights` (all nonnegative, not all
    /// zero).
    pub fn weighted_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        debug_assert!(total > 0.0);
        let mut target = self.uniform01() * total;
        for (i, w) in weights.iter().enumerate() {
            target -= w;
            if target < 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }
}
