//! Randomized sweeps over the number of active sessions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{classify_regime, Regime, SystemParams};
use crate::error::{Error, Result};
use crate::harness::census::{random_census, replication_seed, Popularity};
use crate::layers::LayerProfile;
use crate::satisfaction::{compare_schemes, SchemeComparison};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub params: SystemParams,
    pub min_sessions: usize,
    pub max_sessions: usize,
    pub total_users: u64,
    pub dist: Popularity,
    pub replications: usize,
    pub seed: u64,
    pub profile: LayerProfile,
}

impl ScenarioConfig {
    /// 30 Mbps, 2 Mbps cap, 0.6 Mbps floor, 200 users.
    pub fn reference(min_sessions: usize, max_sessions: usize, dist: Popularity) -> Self {
        ScenarioConfig {
            params: SystemParams::reference(),
            min_sessions,
            max_sessions,
            total_users: 200,
            dist,
            replications: 100,
            seed: 7,
            profile: LayerProfile::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParams(
                "replications must be at least 1".into(),
            ));
        }
        if self.min_sessions == 0 || self.min_sessions > self.max_sessions {
            return Err(Error::InvalidParams(format!(
                "invalid session range {}..={}",
                self.min_sessions, self.max_sessions
            )));
        }
        self.dist.validate()
    }
}

/// Running mean and sample standard deviation.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt()
        }
    }

    fn stat(&self) -> Stat {
        Stat {
            mean: self.mean,
            std: self.std(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single replication.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sessions: usize,
    pub dist: String,
    pub replications: usize,
    pub seed: u64,
    pub avg_sat_equal: Stat,
    pub avg_sat_popularity: Stat,
    pub improved: Stat,
    pub degraded: Stat,
    pub unchanged: Stat,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Session counts skipped because even the floor rate does not fit.
    pub skipped: Vec<usize>,
}

/// Runs one comparison for `(sessions, replication)`.
pub fn run_replication(
    config: &ScenarioConfig,
    sessions: usize,
    replication: usize,
) -> Result<SchemeComparison> {
    let seed = replication_seed(config.seed, sessions, replication);
    let census = random_census(sessions, config.total_users, config.dist, seed)?;
    compare_schemes(&config.params, &census)
}

pub fn run_sweep(config: &ScenarioConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for sessions in config.min_sessions..=config.max_sessions {
        if classify_regime(&config.params, sessions) == Regime::Infeasible {
            skipped.push(sessions);
            continue;
        }
        // Collected in replication order regardless of scheduling.
        let results: Vec<SchemeComparison> = (0..config.replications)
            .into_par_iter()
            .map(|rep| run_replication(config, sessions, rep))
            .collect::<Result<_>>()?;

        let mut equal = Welford::default();
        let mut popularity = Welford::default();
        let mut improved = Welford::default();
        let mut degraded = Welford::default();
        let mut unchanged = Welford::default();
        for r in &results {
            equal.push(r.avg_satisfaction_equal);
            popularity.push(r.avg_satisfaction_popularity);
            improved.push(r.improved_users as f64);
            degraded.push(r.degraded_users as f64);
            unchanged.push(r.unchanged_users as f64);
        }
        rows.push(SweepRow {
            sessions,
            dist: config.dist.to_string(),
            replications: config.replications,
            seed: config.seed,
            avg_sat_equal: equal.stat(),
            avg_sat_popularity: popularity.stat(),
            improved: improved.stat(),
            degraded: degraded.stat(),
            unchanged: unchanged.stat(),
        });
    }
    Ok(SweepOutcome { rows, skipped })
}
