//! JSON documents read and written by the command line tool.

use serde::{Deserialize, Serialize};

use crate::allocation::{
    equal_share_allocate, popularity_allocate, rank_sessions, to_mbps, Regime, SessionCensus,
    SessionId, SystemParams,
};
use crate::error::{Error, Result};
use crate::layers::{quantize_allocation, LayerProfile};
use crate::satisfaction::{compare_allocations, session_satisfaction};
use crate::sim::{EventKind, SimEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEntry {
    pub id: String,
    pub users: u64,
}

/// One-shot allocation request, rates in Mbps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocateInput {
    pub capacity_mbps: f64,
    pub beta_max_mbps: f64,
    pub beta_min_mbps: f64,
    pub sessions: Vec<SessionEntry>,
}

impl AllocateInput {
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(context, e))
    }

    pub fn params(&self) -> Result<SystemParams> {
        SystemParams::from_mbps(self.capacity_mbps, self.beta_max_mbps, self.beta_min_mbps)
    }

    pub fn census(&self) -> Result<SessionCensus> {
        SessionCensus::new(self.sessions.iter().map(|s| (s.id.clone(), s.users)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub id: String,
    pub users: u64,
    pub rank: usize,
    pub rate_mbps: f64,
    pub equal_share_rate_mbps: f64,
    pub satisfaction: f64,
    /// Subscribed layers including the base layer.
    pub layers: u32,
    pub enhancement_layers: u32,
    pub granted_mbps: f64,
    pub residual_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocateOutput {
    pub capacity_mbps: f64,
    pub beta_max_mbps: f64,
    pub beta_min_mbps: f64,
    pub regime: Regime,
    /// Sessions in the order they were given.
    pub sessions: Vec<SessionResult>,
    pub avg_satisfaction_popularity: f64,
    pub avg_satisfaction_equal: f64,
    pub improved_users: u64,
    pub degraded_users: u64,
    pub unchanged_users: u64,
    pub granted_total_mbps: f64,
}

pub fn allocate_document(input: &AllocateInput, profile: &LayerProfile) -> Result<AllocateOutput> {
    let params = input.params()?;
    let census = input.census()?;
    let ranked = rank_sessions(&census);
    let (popularity, _) = popularity_allocate(&params, &ranked)?;
    let equal = equal_share_allocate(&params, &ranked);
    let comparison = compare_allocations(&params, &equal, &popularity, &census)?;
    let satisfaction = session_satisfaction(&params, &popularity);
    let plans = quantize_allocation(&popularity, profile)?;

    let mut sessions = Vec::with_capacity(input.sessions.len());
    for entry in &input.sessions {
        let id = SessionId::new(entry.id.clone());
        let idx = popularity
            .sessions
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| Error::Internal(format!("session {id} missing from allocation")))?;
        let rate = &popularity.sessions[idx];
        let plan = &plans[idx];
        sessions.push(SessionResult {
            id: entry.id.clone(),
            users: entry.users,
            rank: rate.rank,
            rate_mbps: to_mbps(rate.rate_bps),
            equal_share_rate_mbps: to_mbps(equal.sessions[idx].rate_bps),
            satisfaction: satisfaction[idx].satisfaction,
            layers: plan.enhancement_count + 1,
            enhancement_layers: plan.enhancement_count,
            granted_mbps: to_mbps(plan.granted_bps),
            residual_mbps: to_mbps(plan.residual_bps),
        });
    }
    Ok(AllocateOutput {
        capacity_mbps: input.capacity_mbps,
        beta_max_mbps: input.beta_max_mbps,
        beta_min_mbps: input.beta_min_mbps,
        regime: popularity.regime,
        sessions,
        avg_satisfaction_popularity: comparison.avg_satisfaction_popularity,
        avg_satisfaction_equal: comparison.avg_satisfaction_equal,
        improved_users: comparison.improved_users,
        degraded_users: comparison.degraded_users,
        unchanged_users: comparison.unchanged_users,
        granted_total_mbps: to_mbps(plans.iter().map(|p| p.granted_bps).sum()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceVerb {
    Join,
    Leave,
    Switch,
    Start,
    Stop,
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub ev: TraceVerb,
    pub s: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
}

impl TraceRecord {
    pub fn into_event(self) -> std::result::Result<SimEvent, String> {
        let session = SessionId::new(self.s);
        let kind = match self.ev {
            TraceVerb::Join => EventKind::UserJoin { session },
            TraceVerb::Leave => EventKind::UserLeave { session },
            TraceVerb::Start => EventKind::SessionStart { session },
            TraceVerb::Stop => EventKind::SessionStop { session },
            TraceVerb::Switch => EventKind::UserSwitch {
                from: session,
                to: SessionId::new(self.to.ok_or("switch event needs a \"to\" session")?),
            },
        };
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(format!(
                "event time must be a non-negative number, got {}",
                self.t
            ));
        }
        Ok(SimEvent::new(self.t, kind))
    }

    pub fn from_event(event: &SimEvent) -> Self {
        let (ev, s, to) = match &event.kind {
            EventKind::UserJoin { session } => (TraceVerb::Join, session, None),
            EventKind::UserLeave { session } => (TraceVerb::Leave, session, None),
            EventKind::SessionStart { session } => (TraceVerb::Start, session, None),
            EventKind::SessionStop { session } => (TraceVerb::Stop, session, None),
            EventKind::UserSwitch { from, to } => (TraceVerb::Switch, from, Some(to.to_string())),
        };
        TraceRecord {
            t: event.time,
            ev,
            s: s.to_string(),
            to,
        }
    }
}

/// Parses a JSON-lines trace. Blank lines are ignored.
pub fn parse_trace(text: &str, context: &str) -> Result<Vec<SimEvent>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            let here = format!("{context}:{}", i + 1);
            let record: TraceRecord =
                serde_json::from_str(line).map_err(|e| Error::parse(here.clone(), e))?;
            record.into_event().map_err(|e| Error::parse(here, e))
        })
        .collect()
}

pub fn format_trace(events: &[SimEvent]) -> String {
    let mut out = String::new();
    for event in events {
        let line = serde_json::to_string(&TraceRecord::from_event(event))
            .expect("trace records always serialize");
        out.push_str(&line);
        out.push('\n');
    }
    out
}
