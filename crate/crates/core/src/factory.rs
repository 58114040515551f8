//! Nondeterministic cultivation factories feeding a shared pool of magic states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FactoryConfig {
    /// Probability that a cultivation attempt is rejected.
    pub discard_rate: f64,
    /// Accepted states each factory can hold before it pauses.
    pub buffer_depth: u32,
    /// Ignore factories entirely: every request is served immediately.
    pub unlimited: bool,
}

impl Default for FactoryConfig {
    fn default() -> Self {
        FactoryConfig {
            discard_rate: 0.8,
            buffer_depth: 8,
            unlimited: false,
        }
    }
}

impl FactoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discard_rate) {
            return input("factories.discard_rate must lie in [0, 1)");
        }
        if self.buffer_depth == 0 {
            return input("factories.buffer_depth must be at least 1");
        }
        Ok(())
    }
}

struct Factory {
    rng: ChaCha8Rng,
    buffered: u32,
    /// Completion time of the next accepted state while running.
    next_success: Option<u64>,
    attempts: u64,
    successes: u64,
}

/// A bank of factories. Each runs back-to-back attempts while its buffer has
/// room, pauses when full, and restarts the moment a state is taken.
pub struct FactoryPool {
    factories: Vec<Factory>,
    attempt_us: u64,
    accept: f64,
    depth: u32,
    unlimited: bool,
}

impl FactoryPool {
    pub fn new(count: u32, cfg: &FactoryConfig, attempt_us: u64, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if count == 0 && !cfg.unlimited {
            return input("at least one factory is required");
        }
        if attempt_us == 0 {
            return input("cultivation attempt time must be positive");
        }
        let mut pool = FactoryPool {
            factories: (0..count)
                .map(|i| Factory {
                    rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)),
                    buffered: 0,
                    next_success: None,
                    attempts: 0,
                    successes: 0,
                })
                .collect(),
            attempt_us,
            accept: 1.0 - cfg.discard_rate,
            depth: cfg.buffer_depth,
            unlimited: cfg.unlimited,
        };
        for i in 0..pool.factories.len() {
            pool.schedule(i, 0);
        }
        Ok(pool)
    }

    pub fn count(&self) -> usize {
        self.factories.len()
    }

    pub fn is_unlimited(&self) -> bool {
        self.unlimited
    }

    /// Draws attempts from `from` until one is accepted.
    fn schedule(&mut self, i: usize, from: u64) {
        let (attempt, accept) = (self.attempt_us, self.accept);
        let f = &mut self.factories[i];
        let mut t = from;
        loop {
            t += attempt;
            f.attempts += 1;
            if f.rng.gen_bool(accept) {
                break;
            }
        }
        f.next_success = Some(t);
    }

    fn advance(&mut self, now: u64) {
        for i in 0..self.factories.len() {
            while let Some(t) = self.factories[i].next_success {
                if t > now {
                    break;
                }
                let f = &mut self.factories[i];
                f.buffered += 1;
                f.successes += 1;
                f.next_success = None;
                if f.buffered < self.depth {
                    self.schedule(i, t);
                }
            }
        }
    }

    /// States available at `now` across all factories.
    pub fn poll(&mut self, now: u64) -> u32 {
        if self.unlimited {
            return u32::MAX;
        }
        self.advance(now);
        self.factories.iter().map(|f| f.buffered).sum()
    }

    /// Takes one state at `now` from the lowest-indexed factory holding one.
    pub fn take(&mut self, now: u64) -> bool {
        self.take_from(now, 0, 1)
    }

    /// Takes one state from the factories serving site `lane` of `lanes`,
    /// i.e. those with index congruent to `lane` modulo `lanes`.
    pub fn take_from(&mut self, now: u64, lane: u32, lanes: u32) -> bool {
        if self.unlimited {
            return true;
        }
        self.advance(now);
        let Some(i) = self.serving(lane, lanes).find(|&i| self.factories[i].buffered > 0) else {
            return false;
        };
        let was_full = self.factories[i].buffered == self.depth;
        self.factories[i].buffered -= 1;
        if was_full {
            self.schedule(i, now);
        }
        true
    }

    fn serving(&self, lane: u32, lanes: u32) -> impl Iterator<Item = usize> {
        let lanes = lanes.max(1) as usize;
        (lane as usize % lanes..self.factories.len()).step_by(lanes)
    }

    /// Earliest time at or after `now` when a state can be taken.
    pub fn next_available(&mut self, now: u64) -> u64 {
        self.next_available_from(now, 0, 1)
    }

    /// Earliest time at or after `now` when site `lane` of `lanes` can take a state.
    pub fn next_available_from(&mut self, now: u64, lane: u32, lanes: u32) -> u64 {
        if self.unlimited {
            return now;
        }
        self.advance(now);
        if self.serving(lane, lanes).any(|i| self.factories[i].buffered > 0) {
            return now;
        }
        self.serving(lane, lanes)
            .filter_map(|i| self.factories[i].next_success)
            .min()
            .unwrap_or(u64::MAX)
    }

    /// Total (attempts, accepted) so far.
    pub fn stats(&self) -> (u64, u64) {
        self.factories
            .iter()
            .fold((0, 0), |(a, s), f| (a + f.attempts, s + f.successes))
    }
}
