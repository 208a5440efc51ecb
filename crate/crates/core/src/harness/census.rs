use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::SessionCensus;
use crate::error::{Error, Result};

/// Name of the generator recorded in run manifests.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64)";

/// How users spread over sessions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Popularity {
    /// Each user picks a session uniformly at random.
    Uniform,
    /// Session `m` is picked with weight `m^-s`.
    Zipf { s: f64 },
}

impl Popularity {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Popularity::Zipf { s } if !(s.is_finite() && s > 0.0) => Err(Error::InvalidParams(
                format!("zipf exponent must be positive, got {s}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Popularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Popularity::Uniform => f.write_str("uniform"),
            Popularity::Zipf { s } => write!(f, "zipf(s={s})"),
        }
    }
}

/// Draws `total_users` users over `sessions` sessions named `s1..sM`.
pub fn random_census(
    sessions: usize,
    total_users: u64,
    dist: Popularity,
    seed: u64,
) -> Result<SessionCensus> {
    if sessions == 0 {
        return Err(Error::InvalidCensus(
            "at least one session is required".into(),
        ));
    }
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; sessions];
    match dist {
        Popularity::Uniform => {
            for _ in 0..total_users {
                counts[rng.gen_range(0..sessions)] += 1;
            }
        }
        Popularity::Zipf { s } => {
            let weights = (1..=sessions).map(|m| (m as f64).powf(-s));
            let index = WeightedIndex::new(weights)
                .map_err(|e| Error::InvalidParams(format!("zipf weights: {e}")))?;
            for _ in 0..total_users {
                counts[index.sample(&mut rng)] += 1;
            }
        }
    }
    SessionCensus::from_counts(&counts)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for one replication, independent of execution order.
pub fn replication_seed(seed: u64, sessions: usize, replication: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ sessions as u64) ^ replication as u64)
}
