//! Reproducible random streams.
//!
//! A run is identified by a 64-bit seed. Trial `i` of a run draws from its
//! own ChaCha8 stream seeded with `splitmix64(seed ^ splitmix64(i + 1))`, so
//! any single trial can be replayed in isolation and results do not depend
//! on how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

/// The splitmix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSeed {
    pub fn trial_seed(self, trial: u64) -> u64 {
        splitmix64(self.0 ^ splitmix64(trial.wrapping_add(1)))
    }

    pub fn trial_rng(self, trial: u64) -> SimRng {
        SimRng::seed_from_u64(self.trial_seed(trial))
    }

    /// A seed for an independent sub-experiment, e.g. one grid point.
    pub fn derive(self, tag: u64) -> RngSeed {
        RngSeed(splitmix64(self.0.rotate_left(17) ^ splitmix64(!tag)))
    }

    /// A single stream for the whole run (used where there is only one trial).
    pub fn rng(self) -> SimRng {
        self.trial_rng(0)
    }
}

/// Runs `trials` independent trials in parallel and returns their outputs
/// indexed by trial number.
pub fn run_trials<T, F>(seed: RngSeed, trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut SimRng) -> T + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.trial_rng(i);
            f(i, &mut rng)
        })
        .collect()
}
