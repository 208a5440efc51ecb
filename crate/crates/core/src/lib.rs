//! Popularity-weighted bandwidth allocation for broadcast and multicast video.
//!
//! Given a shared capacity and how many users watch each active session,
//! [`allocation`] computes an equal-share baseline and a popularity-based
//! split that favours well-watched sessions while keeping every session
//! between a floor and a cap. [`satisfaction`] scores both, [`layers`] turns
//! rates into whole video layers, [`sim`] replays audience churn and
//! [`harness`] runs randomized sweeps and handles file formats.

pub mod allocation;
pub mod error;
pub mod harness;
pub mod layers;
pub mod satisfaction;
pub mod sim;

pub use allocation::{
    classify_regime, equal_share_allocate, equal_share_rate, popularity_allocate, rank_sessions,
    surplus_coefficients, Allocation, RankedCensus, Regime, Scheme, SessionCensus, SessionId,
    SessionRate, SurplusLedger, SystemParams,
};
pub use error::{Error, Result};
pub use layers::{plan_total_rate, quantize_allocation, LayerProfile, LayeredPlan};
pub use satisfaction::{
    average_satisfaction, compare_schemes, equal_share_satisfaction, session_satisfaction,
    SatisfactionReport, SchemeComparison,
};
pub use sim::{apply_event, generate_trace, run_trace, EventKind, SimEvent, SimState, Snapshot};
