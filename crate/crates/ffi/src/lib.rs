//! C ABI over the popcast allocator and churn simulator.
//!
//! Every call returns a [`PopcastStatus`]. Objects are opaque handles created
//! by `*_new`/`popcast_allocate` and released with the matching `*_free`.
//! After a failing call, `popcast_last_error_message` describes the failure
//! on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use popcast::allocation::{mbps, to_mbps, Regime, SessionCensus, SessionId, SystemParams};
use popcast::layers::LayerProfile;
use popcast::sim::{apply_event, EventKind, SimEvent, SimState, Snapshot};
use popcast::Error;

/// Status codes. 2, 3 and 4 share meaning with the command line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopcastStatus {
    Ok = 0,
    Internal = 1,
    Infeasible = 2,
    InvalidInput = 3,
    NullPointer = 5,
    EmptySession = 6,
    DuplicateSession = 7,
    UnknownSession = 8,
    OutOfRange = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopcastRegime {
    Saturated = 0,
    Constrained = 1,
    Infeasible = 2,
}

/// System and layer parameters, all in Mbps.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PopcastParams {
    pub capacity_mbps: f64,
    pub beta_max_mbps: f64,
    pub beta_min_mbps: f64,
    pub base_layer_mbps: f64,
    pub enh_layer_mbps: f64,
}

/// One session of a result, in rank order.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PopcastSessionInfo {
    pub rank: usize,
    pub users: u64,
    pub rate_mbps: f64,
    pub equal_share_rate_mbps: f64,
    pub satisfaction: f64,
    pub enhancement_layers: u32,
    pub granted_mbps: f64,
    pub residual_mbps: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PopcastSummary {
    pub regime: PopcastRegime,
    pub session_count: usize,
    pub total_users: u64,
    pub avg_satisfaction_popularity: f64,
    pub avg_satisfaction_equal: f64,
    pub improved_users: u64,
    pub degraded_users: u64,
    pub unchanged_users: u64,
}

/// Audience under construction.
pub struct PopcastCensus {
    entries: Vec<(SessionId, u64)>,
}

/// Allocation outcome for one census.
pub struct PopcastResult {
    ids: Vec<CString>,
    sessions: Vec<PopcastSessionInfo>,
    summary: PopcastSummary,
}

/// Live simulator state.
pub struct PopcastSim {
    params: SystemParams,
    profile: LayerProfile,
    state: SimState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn fail(status: PopcastStatus, message: impl Into<String>) -> PopcastStatus {
    set_error(message.into());
    status
}

fn status_of(error: &Error) -> PopcastStatus {
    match error {
        Error::InfeasibleCapacity { .. } | Error::ProfileInfeasible { .. } => {
            PopcastStatus::Infeasible
        }
        Error::EmptySession(_) => PopcastStatus::EmptySession,
        Error::DuplicateSession(_) => PopcastStatus::DuplicateSession,
        Error::UnknownSession(_) => PopcastStatus::UnknownSession,
        Error::Internal(_) => PopcastStatus::Internal,
        _ => PopcastStatus::InvalidInput,
    }
}

fn fail_with(error: Error) -> PopcastStatus {
    fail(status_of(&error), error.to_string())
}

unsafe fn session_id(id: *const c_char) -> Result<SessionId, PopcastStatus> {
    if id.is_null() {
        return Err(fail(PopcastStatus::NullPointer, "session id is null"));
    }
    match CStr::from_ptr(id).to_str() {
        Ok(s) => Ok(SessionId::new(s)),
        Err(_) => Err(fail(PopcastStatus::InvalidInput, "session id is not UTF-8")),
    }
}

fn build_params(params: &PopcastParams) -> Result<(SystemParams, LayerProfile), Error> {
    let system = SystemParams::from_mbps(
        params.capacity_mbps,
        params.beta_max_mbps,
        params.beta_min_mbps,
    )?;
    let profile = LayerProfile::new(
        mbps(params.base_layer_mbps),
        mbps(params.enh_layer_mbps),
        None,
    )?;
    profile.check_against_floor(system.min_session_bps())?;
    Ok((system, profile))
}

fn result_from(snapshot: &Snapshot) -> PopcastResult {
    let pop = &snapshot.popularity;
    let regime = match pop.regime {
        Regime::Saturated => PopcastRegime::Saturated,
        Regime::Constrained => PopcastRegime::Constrained,
        Regime::Infeasible => PopcastRegime::Infeasible,
    };
    let mut ids = Vec::with_capacity(pop.sessions.len());
    let mut sessions = Vec::with_capacity(pop.sessions.len());
    for (i, s) in pop.sessions.iter().enumerate() {
        let plan = &snapshot.plans[i];
        ids.push(CString::new(s.id.as_str().replace('\0', " ")).expect("interior nuls removed"));
        sessions.push(PopcastSessionInfo {
            rank: s.rank,
            users: s.users,
            rate_mbps: to_mbps(s.rate_bps),
            equal_share_rate_mbps: to_mbps(snapshot.equal_share.sessions[i].rate_bps),
            satisfaction: snapshot.satisfaction_popularity.per_session[i].satisfaction,
            enhancement_layers: plan.enhancement_count,
            granted_mbps: to_mbps(plan.granted_bps),
            residual_mbps: to_mbps(plan.residual_bps),
        });
    }
    let cmp = &snapshot.comparison;
    PopcastResult {
        ids,
        sessions,
        summary: PopcastSummary {
            regime,
            session_count: pop.sessions.len(),
            total_users: snapshot.census.total_users(),
            avg_satisfaction_popularity: cmp.avg_satisfaction_popularity,
            avg_satisfaction_equal: cmp.avg_satisfaction_equal,
            improved_users: cmp.improved_users,
            degraded_users: cmp.degraded_users,
            unchanged_users: cmp.unchanged_users,
        },
    }
}

/// Message for the most recent failure on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn popcast_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Parameters of the reference setup: 30 Mbps, 2 Mbps cap, 0.6 Mbps floor,
/// 0.6 Mbps base layer and 0.25 Mbps enhancement layers.
#[no_mangle]
pub extern "C" fn popcast_params_default() -> PopcastParams {
    PopcastParams {
        capacity_mbps: 30.0,
        beta_max_mbps: 2.0,
        beta_min_mbps: 0.6,
        base_layer_mbps: 0.6,
        enh_layer_mbps: 0.25,
    }
}

#[no_mangle]
pub extern "C" fn popcast_census_new() -> *mut PopcastCensus {
    Box::into_raw(Box::new(PopcastCensus {
        entries: Vec::new(),
    }))
}

/// # Safety
/// `census` must come from `popcast_census_new` and not be freed yet, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn popcast_census_free(census: *mut PopcastCensus) {
    if !census.is_null() {
        drop(Box::from_raw(census));
    }
}

/// Adds a session. Ids must be unique NUL-terminated UTF-8 strings.
///
/// # Safety
/// `census` must be a live handle and `id` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn popcast_census_add(
    census: *mut PopcastCensus,
    id: *const c_char,
    users: u64,
) -> PopcastStatus {
    let Some(census) = census.as_mut() else {
        return fail(PopcastStatus::NullPointer, "census is null");
    };
    let id = match session_id(id) {
        Ok(id) => id,
        Err(status) => return status,
    };
    if census.entries.iter().any(|(existing, _)| existing == &id) {
        return fail(
            PopcastStatus::DuplicateSession,
            format!("session {id} already exists"),
        );
    }
    census.entries.push((id, users));
    PopcastStatus::Ok
}

unsafe fn checked_inputs(
    params: *const PopcastParams,
    census: *const PopcastCensus,
) -> Result<(SystemParams, LayerProfile, SessionCensus), PopcastStatus> {
    let (Some(params), Some(census)) = (params.as_ref(), census.as_ref()) else {
        return Err(fail(PopcastStatus::NullPointer, "params or census is null"));
    };
    let (system, profile) = build_params(params).map_err(fail_with)?;
    let census = SessionCensus::new(census.entries.iter().cloned()).map_err(fail_with)?;
    Ok((system, profile, census))
}

/// Allocates both schemes for `census` and stores a new result in `*out`.
///
/// # Safety
/// All pointers must be valid; `*out` receives a handle to free with
/// `popcast_result_free`.
#[no_mangle]
pub unsafe extern "C" fn popcast_allocate(
    params: *const PopcastParams,
    census: *const PopcastCensus,
    out: *mut *mut PopcastResult,
) -> PopcastStatus {
    if out.is_null() {
        return fail(PopcastStatus::NullPointer, "out is null");
    }
    *out = ptr::null_mut();
    let (system, profile, census) = match checked_inputs(params, census) {
        Ok(v) => v,
        Err(status) => return status,
    };
    match SimState::new(&system, &profile, census, 0.0) {
        Ok(state) => {
            *out = Box::into_raw(Box::new(result_from(state.snapshot())));
            PopcastStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// # Safety
/// `result` must come from this library and not be freed yet, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn popcast_result_free(result: *mut PopcastResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn popcast_result_summary(
    result: *const PopcastResult,
    out: *mut PopcastSummary,
) -> PopcastStatus {
    match (result.as_ref(), out.as_mut()) {
        (Some(result), Some(out)) => {
            *out = result.summary;
            PopcastStatus::Ok
        }
        _ => fail(PopcastStatus::NullPointer, "result or out is null"),
    }
}

/// Session at rank `index + 1`.
///
/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn popcast_result_session(
    result: *const PopcastResult,
    index: usize,
    out: *mut PopcastSessionInfo,
) -> PopcastStatus {
    let (Some(result), Some(out)) = (result.as_ref(), out.as_mut()) else {
        return fail(PopcastStatus::NullPointer, "result or out is null");
    };
    match result.sessions.get(index) {
        Some(info) => {
            *out = *info;
            PopcastStatus::Ok
        }
        None => fail(
            PopcastStatus::OutOfRange,
            format!("no session at index {index}"),
        ),
    }
}

/// Id of the session at rank `index + 1`, or NULL when out of range.
/// Borrowed from `result`; valid until it is freed.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn popcast_result_session_id(
    result: *const PopcastResult,
    index: usize,
) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.ids.get(index))
        .map_or(ptr::null(), |id| id.as_ptr())
}

/// Starts a simulator at the given census.
///
/// # Safety
/// All pointers must be valid; `*out` receives a handle to free with
/// `popcast_sim_free`.
#[no_mangle]
pub unsafe extern "C" fn popcast_sim_new(
    params: *const PopcastParams,
    census: *const PopcastCensus,
    out: *mut *mut PopcastSim,
) -> PopcastStatus {
    if out.is_null() {
        return fail(PopcastStatus::NullPointer, "out is null");
    }
    *out = ptr::null_mut();
    let (system, profile, census) = match checked_inputs(params, census) {
        Ok(v) => v,
        Err(status) => return status,
    };
    match SimState::new(&system, &profile, census, 0.0) {
        Ok(state) => {
            *out = Box::into_raw(Box::new(PopcastSim {
                params: system,
                profile,
                state,
            }));
            PopcastStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// # Safety
/// `sim` must come from `popcast_sim_new` and not be freed yet, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn popcast_sim_free(sim: *mut PopcastSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

unsafe fn sim_apply(sim: *mut PopcastSim, time: f64, kind: EventKind) -> PopcastStatus {
    let Some(sim) = sim.as_mut() else {
        return fail(PopcastStatus::NullPointer, "sim is null");
    };
    let last = sim.state.snapshot().time;
    if time.is_nan() || time < last {
        return fail(
            PopcastStatus::InvalidInput,
            format!("event at t={time} precedes previous event at t={last}"),
        );
    }
    match apply_event(
        &sim.state,
        &SimEvent::new(time, kind),
        &sim.params,
        &sim.profile,
    ) {
        Ok((next, _)) => {
            sim.state = next;
            PopcastStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

unsafe fn session_event(
    sim: *mut PopcastSim,
    time: f64,
    session: *const c_char,
    make: fn(SessionId) -> EventKind,
) -> PopcastStatus {
    match session_id(session) {
        Ok(session) => sim_apply(sim, time, make(session)),
        Err(status) => status,
    }
}

/// One user joins `session`.
///
/// # Safety
/// `sim` must be a live handle and `session` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn popcast_sim_join(
    sim: *mut PopcastSim,
    time: f64,
    session: *const c_char,
) -> PopcastStatus {
    session_event(sim, time, session, |session| EventKind::UserJoin {
        session,
    })
}

/// One user leaves `session`.
///
/// # Safety
/// `sim` must be a live handle and `session` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn popcast_sim_leave(
    sim: *mut PopcastSim,
    time: f64,
    session: *const c_char,
) -> PopcastStatus {
    session_event(sim, time, session, |session| EventKind::UserLeave {
        session,
    })
}

/// Opens `session` with no users.
///
/// # Safety
/// `sim` must be a live handle and `session` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn popcast_sim_start(
    sim: *mut PopcastSim,
    time: f64,
    session: *const c_char,
) -> PopcastStatus {
    session_event(sim, time, session, |session| EventKind::SessionStart {
        session,
    })
}

/// Closes `session`; its users leave the system.
///
/// # Safety
/// `sim` must be a live handle and `session` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn popcast_sim_stop(
    sim: *mut PopcastSim,
    time: f64,
    session: *const c_char,
) -> PopcastStatus {
    session_event(sim, time, session, |session| EventKind::SessionStop {
        session,
    })
}

/// One user moves from `from` to `to`.
///
/// # Safety
/// `sim` must be a live handle and both ids valid C strings.
#[no_mangle]
pub unsafe extern "C" fn popcast_sim_switch(
    sim: *mut PopcastSim,
    time: f64,
    from: *const c_char,
    to: *const c_char,
) -> PopcastStatus {
    let from = match session_id(from) {
        Ok(id) => id,
        Err(status) => return status,
    };
    match session_id(to) {
        Ok(to) => sim_apply(sim, time, EventKind::UserSwitch { from, to }),
        Err(status) => status,
    }
}

/// Current allocation of the simulator as a new result handle.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn popcast_sim_result(
    sim: *const PopcastSim,
    out: *mut *mut PopcastResult,
) -> PopcastStatus {
    let (Some(sim), false) = (sim.as_ref(), out.is_null()) else {
        return fail(PopcastStatus::NullPointer, "sim or out is null");
    };
    *out = Box::into_raw(Box::new(result_from(sim.state.snapshot())));
    PopcastStatus::Ok
}
