//! User satisfaction under each scheme and the head-to-head comparison.
//!
//! Satisfaction is linear in rate: a session at its demanded rate scores 1.

use serde::{Deserialize, Serialize};

use crate::allocation::{
    equal_share_allocate, popularity_allocate, rank_sessions, Allocation, Regime, Scheme,
    SessionCensus, SessionId, SystemParams,
};
use crate::error::{Error, Result};

/// Absolute tolerance on the satisfaction scale.
pub const SATISFACTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSatisfaction {
    pub id: SessionId,
    pub users: u64,
    pub satisfaction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionReport {
    pub scheme: Scheme,
    /// Rank order, mirroring the allocation.
    pub per_session: Vec<SessionSatisfaction>,
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeComparison {
    pub improved_users: u64,
    pub degraded_users: u64,
    pub unchanged_users: u64,
    pub avg_satisfaction_equal: f64,
    pub avg_satisfaction_popularity: f64,
    pub delta_avg: f64,
}

pub fn equal_share_satisfaction(params: &SystemParams, session_count: usize) -> f64 {
    let m = session_count as f64;
    if params.max_session_bps() * m <= params.capacity_bps() {
        1.0
    } else {
        params.capacity_bps() / (params.max_session_bps() * m)
    }
}

pub fn session_satisfaction(
    params: &SystemParams,
    allocation: &Allocation,
) -> Vec<SessionSatisfaction> {
    let saturated = allocation.regime == Regime::Saturated;
    allocation
        .sessions
        .iter()
        .map(|s| SessionSatisfaction {
            id: s.id.clone(),
            users: s.users,
            satisfaction: if saturated {
                1.0
            } else {
                s.rate_bps / params.max_session_bps()
            },
        })
        .collect()
}

/// User-weighted mean satisfaction. Errors with `ZeroAudience` when nobody watches.
pub fn average_satisfaction(
    params: &SystemParams,
    allocation: &Allocation,
    census: &SessionCensus,
) -> Result<f64> {
    if allocation.regime == Regime::Saturated {
        return Ok(1.0);
    }
    let total = census.total_users();
    if total == 0 {
        return Err(Error::ZeroAudience);
    }
    let mut weighted = 0.0;
    for s in &allocation.sessions {
        let users = census
            .users(&s.id)
            .ok_or_else(|| Error::UnknownSession(s.id.clone()))?;
        weighted += s.rate_bps / params.max_session_bps() * users as f64;
    }
    Ok(weighted / total as f64)
}

/// Satisfaction report for one allocation.
///
/// With an empty audience the average is taken over sessions instead of users.
pub fn satisfaction_report(
    params: &SystemParams,
    allocation: &Allocation,
    census: &SessionCensus,
) -> Result<SatisfactionReport> {
    let per_session = session_satisfaction(params, allocation);
    let average = match average_satisfaction(params, allocation, census) {
        Ok(avg) => avg,
        Err(Error::ZeroAudience) => {
            per_session.iter().map(|s| s.satisfaction).sum::<f64>() / per_session.len() as f64
        }
        Err(e) => return Err(e),
    };
    Ok(SatisfactionReport {
        scheme: allocation.scheme,
        per_session,
        average,
    })
}

/// Counts users who gain, lose or keep quality under the popularity scheme.
///
/// Rate differences are judged on the satisfaction scale with
/// [`SATISFACTION_TOL`].
pub fn compare_allocations(
    params: &SystemParams,
    equal: &Allocation,
    popularity: &Allocation,
    census: &SessionCensus,
) -> Result<SchemeComparison> {
    let mut improved = 0;
    let mut degraded = 0;
    let mut unchanged = 0;
    for s in &popularity.sessions {
        let base = equal
            .rate_of(&s.id)
            .ok_or_else(|| Error::UnknownSession(s.id.clone()))?;
        let delta = (s.rate_bps - base) / params.max_session_bps();
        if delta > SATISFACTION_TOL {
            improved += s.users;
        } else if delta < -SATISFACTION_TOL {
            degraded += s.users;
        } else {
            unchanged += s.users;
        }
    }
    let avg_equal = equal_share_satisfaction(params, census.session_count());
    let avg_pop = satisfaction_report(params, popularity, census)?.average;
    Ok(SchemeComparison {
        improved_users: improved,
        degraded_users: degraded,
        unchanged_users: unchanged,
        avg_satisfaction_equal: avg_equal,
        avg_satisfaction_popularity: avg_pop,
        delta_avg: avg_pop - avg_equal,
    })
}

pub fn compare_schemes(params: &SystemParams, census: &SessionCensus) -> Result<SchemeComparison> {
    let ranked = rank_sessions(census);
    let equal = equal_share_allocate(params, &ranked);
    let (popularity, _) = popularity_allocate(params, &ranked)?;
    compare_allocations(params, &equal, &popularity, census)
}
