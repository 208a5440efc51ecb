//! Session ranking and the two bandwidth allocation schemes.
//!
//! All rates are carried in bits per second. The equal-share scheme hands
//! every session the same rate. The popularity scheme gives every session the
//! floor rate, then spreads the remaining capacity in proportion to audience
//! size, walking the sessions from most to least watched. Whatever a popular
//! session cannot absorb above the cap is carried down and split evenly over
//! the sessions that follow it.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bits per second in one megabit per second.
pub const BPS_PER_MBPS: f64 = 1e6;

/// Relative tolerance for conservation and rational-oracle comparisons.
pub const RATE_REL_TOL: f64 = 1e-9;

pub fn mbps(value: f64) -> f64 {
    value * BPS_PER_MBPS
}

pub fn to_mbps(bps: f64) -> f64 {
    bps / BPS_PER_MBPS
}

/// Opaque, totally ordered session identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(String);

impl SessionId {
    pub fn new(id: impl Into<String>) -> Self {
        SessionId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SessionId {
    fn from(s: &str) -> Self {
        SessionId(s.to_owned())
    }
}

impl From<String> for SessionId {
    fn from(s: String) -> Self {
        SessionId(s)
    }
}

/// Capacity and per-session rate bounds, in bits per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    capacity_bps: f64,
    max_session_bps: f64,
    min_session_bps: f64,
}

impl SystemParams {
    pub fn new(capacity_bps: f64, max_session_bps: f64, min_session_bps: f64) -> Result<Self> {
        if !(capacity_bps.is_finite() && capacity_bps > 0.0) {
            return Err(Error::InvalidParams(format!(
                "capacity must be positive, got {capacity_bps}"
            )));
        }
        if !(min_session_bps.is_finite() && min_session_bps > 0.0) {
            return Err(Error::InvalidParams(format!(
                "minimum session rate must be positive, got {min_session_bps}"
            )));
        }
        if !(max_session_bps.is_finite() && max_session_bps >= min_session_bps) {
            return Err(Error::InvalidParams(format!(
                "maximum session rate {max_session_bps} is below the minimum {min_session_bps}"
            )));
        }
        Ok(SystemParams {
            capacity_bps,
            max_session_bps,
            min_session_bps,
        })
    }

    pub fn from_mbps(capacity: f64, max_session: f64, min_session: f64) -> Result<Self> {
        Self::new(mbps(capacity), mbps(max_session), mbps(min_session))
    }

    /// 30 Mbps shared by sessions demanding 2 Mbps with a 0.6 Mbps floor.
    pub fn reference() -> Self {
        Self::from_mbps(30.0, 2.0, 0.6).expect("reference parameters are valid")
    }

    pub fn capacity_bps(&self) -> f64 {
        self.capacity_bps
    }

    pub fn max_session_bps(&self) -> f64 {
        self.max_session_bps
    }

    pub fn min_session_bps(&self) -> f64 {
        self.min_session_bps
    }

    /// `max - min`, the room each session has above its floor.
    pub fn headroom_bps(&self) -> f64 {
        self.max_session_bps - self.min_session_bps
    }
}

/// Audience count per active session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<SessionId, u64>",
    into = "BTreeMap<SessionId, u64>"
)]
pub struct SessionCensus {
    sessions: BTreeMap<SessionId, u64>,
}

impl TryFrom<BTreeMap<SessionId, u64>> for SessionCensus {
    type Error = Error;

    fn try_from(sessions: BTreeMap<SessionId, u64>) -> Result<Self> {
        if sessions.is_empty() {
            return Err(Error::InvalidCensus(
                "at least one session is required".into(),
            ));
        }
        Ok(SessionCensus { sessions })
    }
}

impl From<SessionCensus> for BTreeMap<SessionId, u64> {
    fn from(census: SessionCensus) -> Self {
        census.sessions
    }
}

impl SessionCensus {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<SessionId>,
    {
        let mut sessions = BTreeMap::new();
        for (id, users) in entries {
            let id = id.into();
            if sessions.insert(id.clone(), users).is_some() {
                return Err(Error::InvalidCensus(format!("duplicate session id {id}")));
            }
        }
        if sessions.is_empty() {
            return Err(Error::InvalidCensus(
                "at least one session is required".into(),
            ));
        }
        Ok(SessionCensus { sessions })
    }

    /// Sessions named `s1..sM` in the given order of counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let width = counts.len().to_string().len();
        Self::new(
            counts
                .iter()
                .enumerate()
                .map(|(i, &k)| (format!("s{:0width$}", i + 1), k)),
        )
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    pub fn total_users(&self) -> u64 {
        self.sessions.values().sum()
    }

    pub fn users(&self, id: &SessionId) -> Option<u64> {
        self.sessions.get(id).copied()
    }

    pub fn contains(&self, id: &SessionId) -> bool {
        self.sessions.contains_key(id)
    }

    /// Entries in ascending session id order.
    pub fn iter(&self) -> impl Iterator<Item = (&SessionId, u64)> + '_ {
        self.sessions.iter().map(|(id, &k)| (id, k))
    }

    pub(crate) fn entries_mut(&mut self) -> &mut BTreeMap<SessionId, u64> {
        &mut self.sessions
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedSession {
    /// 1 is the most watched session.
    pub rank: usize,
    pub id: SessionId,
    pub users: u64,
}

/// Sessions ordered by non-increasing audience, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedCensus {
    sessions: Vec<RankedSession>,
    total_users: u64,
}

impl RankedCensus {
    pub fn sessions(&self) -> &[RankedSession] {
        &self.sessions
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    pub fn total_users(&self) -> u64 {
        self.total_users
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.sessions.iter().map(|s| s.users)
    }
}

pub fn rank_sessions(census: &SessionCensus) -> RankedCensus {
    let mut entries: Vec<(&SessionId, u64)> = census.iter().collect();
    // Census iterates in id order, so a stable sort on count alone keeps ties by id.
    entries.sort_by_key(|e| std::cmp::Reverse(e.1));
    let sessions = entries
        .into_iter()
        .enumerate()
        .map(|(i, (id, users))| RankedSession {
            rank: i + 1,
            id: id.clone(),
            users,
        })
        .collect();
    RankedCensus {
        sessions,
        total_users: census.total_users(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Every session gets its full demanded rate.
    Saturated,
    /// The floor fits but the cap does not.
    Constrained,
    /// Not even the floor fits.
    Infeasible,
}

pub fn classify_regime(params: &SystemParams, session_count: usize) -> Regime {
    let m = session_count as f64;
    if params.max_session_bps * m <= params.capacity_bps {
        Regime::Saturated
    } else if params.min_session_bps * m <= params.capacity_bps {
        Regime::Constrained
    } else {
        Regime::Infeasible
    }
}

fn ensure_feasible(params: &SystemParams, session_count: usize) -> Result<Regime> {
    match classify_regime(params, session_count) {
        Regime::Infeasible => Err(Error::InfeasibleCapacity {
            sessions: session_count,
            required_bps: params.min_session_bps * session_count as f64,
            capacity_bps: params.capacity_bps,
        }),
        regime => Ok(regime),
    }
}

/// Intermediate quantities of the popularity cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurplusLedger {
    /// Spare bandwidth above the floors per watching user.
    pub surplus_coefficient: f64,
    pub headroom_bps: f64,
    /// Carry produced at ranks `1..M-1`. Rank M never produces one.
    pub carries: Vec<f64>,
}

/// Returns `(surplus per user, headroom)` for a constrained census.
pub fn surplus_coefficients(params: &SystemParams, census: &SessionCensus) -> Result<(f64, f64)> {
    surplus_for(params, census.session_count(), census.total_users())
}

fn surplus_for(params: &SystemParams, sessions: usize, users: u64) -> Result<(f64, f64)> {
    if users == 0 {
        return Err(Error::ZeroAudience);
    }
    let spare = params.capacity_bps - sessions as f64 * params.min_session_bps;
    Ok((spare.max(0.0) / users as f64, params.headroom_bps()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EqualShare,
    PopularityBased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRate {
    pub rank: usize,
    pub id: SessionId,
    pub users: u64,
    pub rate_bps: f64,
}

/// Per-session rates in rank order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub scheme: Scheme,
    pub regime: Regime,
    pub sessions: Vec<SessionRate>,
}

impl Allocation {
    pub fn total_bps(&self) -> f64 {
        self.sessions.iter().map(|s| s.rate_bps).sum()
    }

    pub fn rate_of(&self, id: &SessionId) -> Option<f64> {
        self.sessions
            .iter()
            .find(|s| &s.id == id)
            .map(|s| s.rate_bps)
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.sessions.iter().map(|s| s.rate_bps)
    }

    fn build(scheme: Scheme, regime: Regime, ranked: &RankedCensus, rates: &[f64]) -> Self {
        let sessions = ranked
            .sessions
            .iter()
            .zip(rates)
            .map(|(s, &rate_bps)| SessionRate {
                rank: s.rank,
                id: s.id.clone(),
                users: s.users,
                rate_bps,
            })
            .collect();
        Allocation {
            scheme,
            regime,
            sessions,
        }
    }
}

/// The rate every session receives when capacity is split evenly.
///
/// No floor is applied: with enough sessions this drops below the minimum rate.
pub fn equal_share_rate(params: &SystemParams, session_count: usize) -> f64 {
    let m = session_count as f64;
    if params.max_session_bps * m <= params.capacity_bps {
        params.max_session_bps
    } else {
        params.capacity_bps / m
    }
}

pub fn equal_share_allocate(params: &SystemParams, ranked: &RankedCensus) -> Allocation {
    let m = ranked.session_count();
    let rate = equal_share_rate(params, m);
    Allocation::build(
        Scheme::EqualShare,
        classify_regime(params, m),
        ranked,
        &vec![rate; m],
    )
}

/// Runs the popularity cascade.
///
/// The ledger is `None` when no cascade runs: either every session is
/// saturated, or nobody is watching and capacity is split uniformly.
pub fn popularity_allocate(
    params: &SystemParams,
    ranked: &RankedCensus,
) -> Result<(Allocation, Option<SurplusLedger>)> {
    let m = ranked.session_count();
    if m == 0 {
        return Err(Error::InvalidCensus(
            "at least one session is required".into(),
        ));
    }
    let regime = ensure_feasible(params, m)?;
    if regime == Regime::Saturated {
        let rates = vec![params.max_session_bps; m];
        return Ok((
            Allocation::build(Scheme::PopularityBased, regime, ranked, &rates),
            None,
        ));
    }

    let (surplus, headroom) = match surplus_for(params, m, ranked.total_users) {
        Ok(v) => v,
        Err(Error::ZeroAudience) => {
            let rates = vec![params.capacity_bps / m as f64; m];
            return Ok((
                Allocation::build(Scheme::PopularityBased, regime, ranked, &rates),
                None,
            ));
        }
        Err(e) => return Err(e),
    };

    let mut rates = Vec::with_capacity(m);
    let mut carries = Vec::with_capacity(m.saturating_sub(1));
    let mut carried = 0.0;
    for (idx, session) in ranked.sessions.iter().enumerate() {
        let share = surplus * session.users as f64 + carried;
        let remaining = m - idx - 1;
        if share >= headroom {
            rates.push(params.max_session_bps);
            if remaining > 0 {
                let carry = (share - headroom) / remaining as f64;
                carries.push(carry);
                carried += carry;
            } else {
                // Exact arithmetic never reaches here; tolerate rounding only.
                let lost = share - headroom;
                if lost > RATE_REL_TOL * params.capacity_bps {
                    return Err(Error::Internal(format!(
                        "last-ranked session overflowed its cap by {lost} bit/s"
                    )));
                }
            }
        } else {
            rates.push(params.min_session_bps + share);
            if remaining > 0 {
                carries.push(0.0);
            }
        }
    }

    let ledger = SurplusLedger {
        surplus_coefficient: surplus,
        headroom_bps: headroom,
        carries,
    };
    Ok((
        Allocation::build(Scheme::PopularityBased, regime, ranked, &rates),
        Some(ledger),
    ))
}
