//! Event-driven audience churn with reallocation after every event.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{
    equal_share_allocate, popularity_allocate, rank_sessions, Allocation, SessionCensus, SessionId,
    SystemParams,
};
use crate::error::{Error, Result};
use crate::layers::{quantize_allocation, LayerProfile, LayeredPlan};
use crate::satisfaction::{
    compare_allocations, satisfaction_report, SatisfactionReport, SchemeComparison,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    UserJoin { session: SessionId },
    UserLeave { session: SessionId },
    UserSwitch { from: SessionId, to: SessionId },
    SessionStart { session: SessionId },
    SessionStop { session: SessionId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    /// Seconds since the start of the trace.
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl SimEvent {
    pub fn new(time: f64, kind: EventKind) -> Self {
        SimEvent { time, kind }
    }
}

/// Post-event state of the system, recomputed from the census alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub census: SessionCensus,
    pub equal_share: Allocation,
    pub popularity: Allocation,
    pub satisfaction_equal: SatisfactionReport,
    pub satisfaction_popularity: SatisfactionReport,
    pub comparison: SchemeComparison,
    /// Layer plans for the popularity allocation.
    pub plans: Vec<LayeredPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    snapshot: Snapshot,
}

impl SimState {
    pub fn new(
        params: &SystemParams,
        profile: &LayerProfile,
        census: SessionCensus,
        time: f64,
    ) -> Result<Self> {
        Ok(SimState {
            snapshot: evaluate(params, profile, census, time)?,
        })
    }

    pub fn census(&self) -> &SessionCensus {
        &self.snapshot.census
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn popularity(&self) -> &Allocation {
        &self.snapshot.popularity
    }

    pub fn equal_share(&self) -> &Allocation {
        &self.snapshot.equal_share
    }

    pub fn plans(&self) -> &[LayeredPlan] {
        &self.snapshot.plans
    }
}

fn evaluate(
    params: &SystemParams,
    profile: &LayerProfile,
    census: SessionCensus,
    time: f64,
) -> Result<Snapshot> {
    let ranked = rank_sessions(&census);
    let (popularity, _) = popularity_allocate(params, &ranked)?;
    let equal_share = equal_share_allocate(params, &ranked);
    let satisfaction_equal = satisfaction_report(params, &equal_share, &census)?;
    let satisfaction_popularity = satisfaction_report(params, &popularity, &census)?;
    let comparison = compare_allocations(params, &equal_share, &popularity, &census)?;
    let plans = quantize_allocation(&popularity, profile)?;
    Ok(Snapshot {
        time,
        census,
        equal_share,
        popularity,
        satisfaction_equal,
        satisfaction_popularity,
        comparison,
        plans,
    })
}

fn apply_to_census(census: &SessionCensus, kind: &EventKind) -> Result<SessionCensus> {
    let mut next = census.clone();
    let sessions = next.entries_mut();
    match kind {
        EventKind::UserJoin { session } => {
            *sessions
                .get_mut(session)
                .ok_or_else(|| Error::UnknownSession(session.clone()))? += 1;
        }
        EventKind::UserLeave { session } => {
            let users = sessions
                .get_mut(session)
                .ok_or_else(|| Error::UnknownSession(session.clone()))?;
            if *users == 0 {
                return Err(Error::EmptySession(session.clone()));
            }
            *users -= 1;
        }
        EventKind::UserSwitch { from, to } => {
            if !sessions.contains_key(to) {
                return Err(Error::UnknownSession(to.clone()));
            }
            let users = sessions
                .get_mut(from)
                .ok_or_else(|| Error::UnknownSession(from.clone()))?;
            if *users == 0 {
                return Err(Error::EmptySession(from.clone()));
            }
            *users -= 1;
            *sessions.get_mut(to).expect("checked above") += 1;
        }
        EventKind::SessionStart { session } => {
            if sessions.contains_key(session) {
                return Err(Error::DuplicateSession(session.clone()));
            }
            sessions.insert(session.clone(), 0);
        }
        EventKind::SessionStop { session } => {
            if !sessions.contains_key(session) {
                return Err(Error::UnknownSession(session.clone()));
            }
            if sessions.len() == 1 {
                return Err(Error::InvalidCensus(format!(
                    "stopping {session} would leave no active session"
                )));
            }
            sessions.remove(session);
        }
    }
    Ok(next)
}

/// Applies one event. On error the caller's state is untouched.
pub fn apply_event(
    state: &SimState,
    event: &SimEvent,
    params: &SystemParams,
    profile: &LayerProfile,
) -> Result<(SimState, Snapshot)> {
    let census = apply_to_census(state.census(), &event.kind)?;
    let snapshot = evaluate(params, profile, census, event.time)?;
    Ok((
        SimState {
            snapshot: snapshot.clone(),
        },
        snapshot,
    ))
}

#[derive(Debug)]
pub struct RejectedEvent {
    pub index: usize,
    pub event: SimEvent,
    pub error: Error,
}

#[derive(Debug)]
pub struct TraceOutcome {
    /// Initial snapshot followed by one per accepted event.
    pub snapshots: Vec<Snapshot>,
    pub rejected: Vec<RejectedEvent>,
}

pub fn check_trace_order(trace: &[SimEvent]) -> Result<()> {
    let mut previous = 0.0;
    for (index, event) in trace.iter().enumerate() {
        if event.time.is_nan() || event.time < previous {
            return Err(Error::TraceOrder {
                index,
                time: event.time,
                previous,
            });
        }
        previous = event.time;
    }
    Ok(())
}

pub fn run_trace(
    params: &SystemParams,
    profile: &LayerProfile,
    initial: SessionCensus,
    trace: &[SimEvent],
) -> Result<TraceOutcome> {
    check_trace_order(trace)?;
    let mut state = SimState::new(params, profile, initial, 0.0)?;
    let mut snapshots = vec![state.snapshot().clone()];
    let mut rejected = Vec::new();
    for (index, event) in trace.iter().enumerate() {
        match apply_event(&state, event, params, profile) {
            Ok((next, snapshot)) => {
                state = next;
                snapshots.push(snapshot);
            }
            Err(Error::Internal(msg)) => return Err(Error::Internal(msg)),
            Err(error) => rejected.push(RejectedEvent {
                index,
                event: event.clone(),
                error,
            }),
        }
    }
    Ok(TraceOutcome {
        snapshots,
        rejected,
    })
}

/// Relative frequencies of each event kind in a synthetic trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventMix {
    pub join: f64,
    pub leave: f64,
    pub switch: f64,
    pub start: f64,
    pub stop: f64,
}

impl EventMix {
    pub fn switch_only() -> Self {
        EventMix {
            join: 0.0,
            leave: 0.0,
            switch: 1.0,
            start: 0.0,
            stop: 0.0,
        }
    }
}

impl Default for EventMix {
    fn default() -> Self {
        EventMix {
            join: 0.3,
            leave: 0.3,
            switch: 0.36,
            start: 0.02,
            stop: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceGenConfig {
    pub event_count: usize,
    /// Starting audience; the generator tracks it so events stay applicable.
    pub initial: SessionCensus,
    pub mix: EventMix,
    /// Mean of the exponential gap between events, in seconds.
    pub mean_gap_s: f64,
}

#[derive(Clone, Copy)]
enum Pick {
    Join,
    Leave,
    Switch,
    Start,
    Stop,
}

/// Synthetic churn trace. Deterministic in `seed`.
///
/// Events are drawn against a shadow census so joins, leaves and switches
/// always name a live session with users where needed. Capacity is not
/// checked here; starts that overflow it are rejected at replay.
pub fn generate_trace(config: &TraceGenConfig, seed: u64) -> Vec<SimEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut census: Vec<(SessionId, u64)> = config
        .initial
        .iter()
        .map(|(id, k)| (id.clone(), k))
        .collect();
    let mut next_id = 0usize;
    let mut time = 0.0;
    let mut trace = Vec::with_capacity(config.event_count);
    let mix = config.mix;
    let weights = [
        (Pick::Join, mix.join),
        (Pick::Leave, mix.leave),
        (Pick::Switch, mix.switch),
        (Pick::Start, mix.start),
        (Pick::Stop, mix.stop),
    ];

    while trace.len() < config.event_count {
        let total_users: u64 = census.iter().map(|(_, k)| k).sum();
        let usable: Vec<(Pick, f64)> = weights
            .iter()
            .copied()
            .filter(|&(pick, w)| {
                w > 0.0
                    && match pick {
                        Pick::Leave => total_users > 0,
                        Pick::Switch => total_users > 0 && census.len() > 1,
                        Pick::Stop => census.len() > 1,
                        Pick::Join | Pick::Start => true,
                    }
            })
            .collect();
        let sum: f64 = usable.iter().map(|(_, w)| w).sum();
        if usable.is_empty() || sum <= 0.0 {
            break;
        }

        let u: f64 = rng.gen::<f64>();
        time += -(1.0 - u).ln() * config.mean_gap_s;

        let mut target = rng.gen::<f64>() * sum;
        let mut pick = usable[usable.len() - 1].0;
        for &(p, w) in &usable {
            if target < w {
                pick = p;
                break;
            }
            target -= w;
        }

        let kind = match pick {
            Pick::Join => {
                let i = rng.gen_range(0..census.len());
                census[i].1 += 1;
                EventKind::UserJoin {
                    session: census[i].0.clone(),
                }
            }
            Pick::Leave => {
                let i = pick_user(&mut rng, &census, total_users);
                census[i].1 -= 1;
                EventKind::UserLeave {
                    session: census[i].0.clone(),
                }
            }
            Pick::Switch => {
                let from = pick_user(&mut rng, &census, total_users);
                let mut to = rng.gen_range(0..census.len() - 1);
                if to >= from {
                    to += 1;
                }
                census[from].1 -= 1;
                census[to].1 += 1;
                EventKind::UserSwitch {
                    from: census[from].0.clone(),
                    to: census[to].0.clone(),
                }
            }
            Pick::Start => {
                let id = loop {
                    next_id += 1;
                    let candidate = SessionId::new(format!("g{next_id}"));
                    if census.iter().all(|(c, _)| c != &candidate) {
                        break candidate;
                    }
                };
                census.push((id.clone(), 0));
                EventKind::SessionStart { session: id }
            }
            Pick::Stop => {
                let i = rng.gen_range(0..census.len());
                let (id, _) = census.remove(i);
                EventKind::SessionStop { session: id }
            }
        };
        trace.push(SimEvent::new(time, kind));
    }
    trace
}

// Index of the session holding a uniformly chosen user.
fn pick_user(rng: &mut ChaCha8Rng, census: &[(SessionId, u64)], total_users: u64) -> usize {
    let mut target = rng.gen_range(0..total_users);
    for (i, (_, k)) in census.iter().enumerate() {
        if target < *k {
            return i;
        }
        target -= k;
    }
    unreachable!("target below total user count")
}
