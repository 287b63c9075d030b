//! Exact jump-process simulation, conservative diffusion schemes and
//! replicated estimators.
//!
//! Replica `r` of a run with master seed `s` draws from a ChaCha8 stream
//! seeded with [`replica_seed`]`(s, r)`, so results do not depend on the
//! number of worker threads.

pub mod ctmc;
pub mod diffusion;
pub mod estimators;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ctmc::{simulate_ctmc, simulate_labeled, Trajectory, OCCUPANCY_CAP};
pub use diffusion::{simulate_bep, simulate_bmp, DiffusionRun};
pub use estimators::{estimate_k, stationary_time_average, Dynamics};

/// Mean of replicated observations with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: u64,
    pub seed: u64,
}

impl Estimate {
    /// `|mean - target| <= k·stderr`, with an absolute floor for zero-variance estimates.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + 1e-12 * target.abs().max(1.0)
    }
}

/// Streaming mean/variance accumulator; `merge` is associative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Welford) -> Welford {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Welford { count, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn estimate(&self, seed: u64) -> Estimate {
        Estimate {
            mean: self.mean,
            stderr: (self.variance() / self.count.max(1) as f64).sqrt(),
            replicas: self.count,
            seed,
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `r`: `mix(master + (r + 1)·0x9E3779B97F4A7C15)`.
pub fn replica_seed(master: u64, r: u64) -> u64 {
    mix(master.wrapping_add(r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

pub fn replica_rng(master: u64, r: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replica_seed(master, r))
}

/// Runs `replicas` independent observations in parallel and aggregates them in
/// replica order, which keeps the result bit-for-bit reproducible.
pub fn replicate<F>(replicas: u64, seed: u64, observe: F) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if replicas < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicas, got {replicas}"
        )));
    }
    let values: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| observe(&mut replica_rng(seed, r)))
        .collect::<Result<_>>()?;
    let mut acc = Welford::default();
    for v in values {
        acc.push(v);
    }
    Ok(acc.estimate(seed))
}
