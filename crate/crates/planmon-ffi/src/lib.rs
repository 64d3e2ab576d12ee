//! C ABI for the planmon toolkit.
//!
//! Handles are opaque pointers (`PmInstance`, `PmPolicy`) created and
//! destroyed by this library; every fallible call returns a `PmStatus`
//! code and deposits a human-readable message retrievable with
//! [`pm_last_error_message`] (thread-local, valid until the next failing
//! call on the same thread). All functions are panic-safe: a panic is
//! caught at the boundary and reported as `PM_STATUS_INTERNAL`.
//!
//! Beliefs cross the boundary as `double` arrays of `Pr(precondition
//! holds)`, one entry per stage. Combiners and object actions are small
//! integer enums mirrored in the generated header.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use planmon::combine::{combiner_action, npc_monitor};
use planmon::eval::{evaluate_policy_exact, oracle_value, simulate};
use planmon::model::{load_instance, parse_instance};
use planmon::solver::{load_bundle, serialize_bundle, solve_all};
use planmon::{Combiner, Error, FactoredBelief, MonitoringInstance, ObjectAction, PolicyBundle};

/// Status code returned by every fallible `pm_` function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmStatus {
    /// Success.
    Ok = 0,
    /// Null pointer, bad enum value, out-of-range stage, or malformed belief.
    InvalidArgument = 1,
    /// File could not be read or written.
    Io = 2,
    /// Instance or policy JSON failed to parse.
    Parse = 3,
    /// Instance violated a model invariant.
    Validation = 4,
    /// Internal contract violation (e.g. impossible observation).
    Contract = 5,
    /// Oracle horizon exceeds the depth guard; raise the guard to override.
    DepthGuard = 6,
    /// Exact evaluation exceeded the node budget; raise it to override.
    NodeBudget = 7,
    /// Panic or other unexpected failure inside the library.
    Internal = 8,
}

/// Combiner selector for decision and evaluation calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmCombiner {
    Npc = 0,
    Vapc = 1,
}

/// Joint continue/abandon decision.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmObjectAction {
    Continue = 0,
    Abandon = 1,
}

/// Opaque handle to a validated monitoring instance.
pub struct PmInstance(MonitoringInstance);

/// Opaque handle to a solved policy bundle (owns a copy of its instance).
pub struct PmPolicy(PolicyBundle);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let cleaned: String = message.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).expect("NULs removed"));
}

fn status_of(err: &Error) -> PmStatus {
    match err {
        Error::Io { .. } => PmStatus::Io,
        Error::Parse { .. } => PmStatus::Parse,
        Error::Validation(_) => PmStatus::Validation,
        Error::Contract(_) | Error::ImpossibleObservation => PmStatus::Contract,
        Error::DepthGuardExceeded { .. } => PmStatus::DepthGuard,
        Error::NodeBudgetExceeded { .. } => PmStatus::NodeBudget,
        Error::Input(_) => PmStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> PmStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn invalid(message: &str) -> PmStatus {
    set_error(message);
    PmStatus::InvalidArgument
}

/// Runs `f` with panics converted to `PM_STATUS_INTERNAL`.
fn guarded(f: impl FnOnce() -> PmStatus) -> PmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in planmon".to_string());
            set_error(&format!("internal panic: {msg}"));
            PmStatus::Internal
        }
    }
}

/// # Safety
/// `ptr` must be a valid, NUL-terminated C string.
unsafe fn c_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, PmStatus> {
    if ptr.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| invalid(&format!("{name} is not valid UTF-8")))
}

/// # Safety
/// `ptr` must point to `len` readable doubles.
unsafe fn belief_from(ptr: *const c_double, len: usize) -> Result<FactoredBelief, PmStatus> {
    if ptr.is_null() {
        return Err(invalid("belief is null"));
    }
    let probs = std::slice::from_raw_parts(ptr, len).to_vec();
    FactoredBelief::new(probs).map_err(fail)
}

fn combiner_from(c: PmCombiner) -> Combiner {
    match c {
        PmCombiner::Npc => Combiner::Npc,
        PmCombiner::Vapc => Combiner::Vapc,
    }
}

unsafe fn deref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, PmStatus> {
    ptr.as_ref().ok_or_else(|| invalid(&format!("{name} is null")))
}

/// Message describing the most recent failure on this thread.
///
/// The pointer stays valid until the next failing `pm_` call on the same
/// thread; callers must not free it.
#[no_mangle]
pub extern "C" fn pm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads and validates an instance from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_instance_load(
    path: *const c_char,
    out: *mut *mut PmInstance,
) -> PmStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        let path = match c_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_instance(path).and_then(|inst| inst.validate().map(|_| inst)) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(PmInstance(inst)));
                PmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses and validates an instance from a JSON string.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_instance_from_json(
    json: *const c_char,
    out: *mut *mut PmInstance,
) -> PmStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        let json = match c_str(json, "json") {
            Ok(j) => j,
            Err(s) => return s,
        };
        match parse_instance(json).and_then(|inst| inst.validate().map(|_| inst)) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(PmInstance(inst)));
                PmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of plan stages (and preconditions); 0 if `instance` is null.
///
/// # Safety
/// `instance` must be null or a live handle from `pm_instance_load`/`_from_json`.
#[no_mangle]
pub unsafe extern "C" fn pm_instance_stage_count(instance: *const PmInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.0.len())
}

/// Frees an instance handle; null is a no-op.
///
/// # Safety
/// `instance` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn pm_instance_free(instance: *mut PmInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Solves every single-failure subproblem, producing a policy handle.
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_solve(
    instance: *const PmInstance,
    out: *mut *mut PmPolicy,
) -> PmStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        let inst = match deref(instance, "instance") {
            Ok(i) => i,
            Err(s) => return s,
        };
        match solve_all(&inst.0) {
            Ok(bundle) => {
                *out = Box::into_raw(Box::new(PmPolicy(bundle)));
                PmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Loads a policy bundle previously serialized with `pm_policy_to_json`
/// or the CLI's `solve` command.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_policy_load(path: *const c_char, out: *mut *mut PmPolicy) -> PmStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        let path = match c_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_bundle(path) {
            Ok(bundle) => {
                *out = Box::into_raw(Box::new(PmPolicy(bundle)));
                PmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Serializes a policy bundle to JSON. The returned string must be
/// released with `pm_string_free`.
///
/// # Safety
/// `policy` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_policy_to_json(
    policy: *const PmPolicy,
    out: *mut *mut c_char,
) -> PmStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        let policy = match deref(policy, "policy") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match CString::new(serialize_bundle(&policy.0)) {
            Ok(s) => {
                *out = s.into_raw();
                PmStatus::Ok
            }
            Err(_) => {
                set_error("policy serialization produced an interior NUL");
                PmStatus::Internal
            }
        }
    })
}

/// Frees a string returned by this library; null is a no-op.
///
/// # Safety
/// `s` must be null or a string from `pm_policy_to_json` not freed before.
#[no_mangle]
pub unsafe extern "C" fn pm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of plan stages covered by a policy; 0 if `policy` is null.
///
/// # Safety
/// `policy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pm_policy_stage_count(policy: *const PmPolicy) -> usize {
    policy.as_ref().map_or(0, |p| p.0.len())
}

/// Frees a policy handle; null is a no-op.
///
/// # Safety
/// `policy` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn pm_policy_free(policy: *mut PmPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// One combined decision at `belief` (length `belief_len`, which must
/// equal the stage count) and 1-based `stage`. Writes a 0/1 monitor flag
/// per precondition into `monitor_out` (length `belief_len`) and the
/// continue/abandon choice into `action_out`.
///
/// # Safety
/// Pointer arguments must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn pm_decide(
    policy: *const PmPolicy,
    stage: usize,
    belief: *const c_double,
    belief_len: usize,
    combiner: PmCombiner,
    monitor_out: *mut u8,
    action_out: *mut PmObjectAction,
) -> PmStatus {
    guarded(|| {
        if monitor_out.is_null() || action_out.is_null() {
            return invalid("monitor_out / action_out is null");
        }
        let policy = match deref(policy, "policy") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let b = match belief_from(belief, belief_len) {
            Ok(b) => b,
            Err(s) => return s,
        };
        let monitor = match npc_monitor(&policy.0, &b, stage) {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        let action = match combiner_action(&policy.0, &b, stage, combiner_from(combiner)) {
            Ok(a) => a,
            Err(e) => return fail(e),
        };
        let flags = std::slice::from_raw_parts_mut(monitor_out, belief_len);
        flags.fill(0);
        for k in monitor {
            flags[k - 1] = 1;
        }
        *action_out = match action {
            ObjectAction::Continue => PmObjectAction::Continue,
            ObjectAction::Abandon => PmObjectAction::Abandon,
        };
        PmStatus::Ok
    })
}

/// Exact joint expectimax value at `belief` and 1-based `stage`.
/// Refuses with `PM_STATUS_DEPTH_GUARD` when the remaining horizon
/// exceeds `depth_guard`.
///
/// # Safety
/// Pointer arguments must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn pm_oracle_value(
    instance: *const PmInstance,
    belief: *const c_double,
    belief_len: usize,
    stage: usize,
    depth_guard: usize,
    value_out: *mut c_double,
) -> PmStatus {
    guarded(|| {
        if value_out.is_null() {
            return invalid("value_out is null");
        }
        let inst = match deref(instance, "instance") {
            Ok(i) => i,
            Err(s) => return s,
        };
        let b = match belief_from(belief, belief_len) {
            Ok(b) => b,
            Err(s) => return s,
        };
        match oracle_value(&inst.0, &b, stage, depth_guard) {
            Ok(v) => {
                *value_out = v;
                PmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Exact expected value of the chosen combiner's policy at `belief` and
/// 1-based `stage`. Refuses with `PM_STATUS_NODE_BUDGET` when the
/// evaluation tree exceeds `node_budget` nodes.
///
/// # Safety
/// Pointer arguments must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn pm_policy_value(
    policy: *const PmPolicy,
    belief: *const c_double,
    belief_len: usize,
    stage: usize,
    combiner: PmCombiner,
    node_budget: u64,
    value_out: *mut c_double,
) -> PmStatus {
    guarded(|| {
        if value_out.is_null() {
            return invalid("value_out is null");
        }
        let policy = match deref(policy, "policy") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let b = match belief_from(belief, belief_len) {
            Ok(b) => b,
            Err(s) => return s,
        };
        match evaluate_policy_exact(&policy.0, &b, stage, combiner_from(combiner), node_budget) {
            Ok(v) => {
                *value_out = v;
                PmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Seeded Monte Carlo estimate of a combiner's value from stage 1.
/// Deterministic for a fixed (`episodes`, `seed`) pair.
///
/// # Safety
/// Pointer arguments must be valid for the stated lengths; the out
/// pointers may be null to skip that output.
#[no_mangle]
pub unsafe extern "C" fn pm_simulate(
    policy: *const PmPolicy,
    belief: *const c_double,
    belief_len: usize,
    combiner: PmCombiner,
    episodes: u64,
    seed: u64,
    mean_out: *mut c_double,
    std_error_out: *mut c_double,
) -> PmStatus {
    guarded(|| {
        let policy = match deref(policy, "policy") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let b = match belief_from(belief, belief_len) {
            Ok(b) => b,
            Err(s) => return s,
        };
        match simulate(&policy.0, &b, combiner_from(combiner), episodes, seed) {
            Ok(r) => {
                if !mean_out.is_null() {
                    *mean_out = r.mean;
                }
                if !std_error_out.is_null() {
                    *std_error_out = r.std_error;
                }
                PmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Numeric value of a status code's exit-code convention: 0 for success,
/// 1 for errors, 2 for refusals (depth guard / node budget).
#[no_mangle]
pub extern "C" fn pm_status_exit_code(status: PmStatus) -> c_int {
    match status {
        PmStatus::Ok => 0,
        PmStatus::DepthGuard | PmStatus::NodeBudget => 2,
        _ => 1,
    }
}
