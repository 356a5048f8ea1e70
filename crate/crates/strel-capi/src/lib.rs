//! C ABI over the monitor: opaque handles, status codes, UTF-8 strings.
//!
//! Every function is safe to call from any thread, but a single handle
//! must not be used from two threads at once. Failing calls store a
//! message retrievable with [`strel_last_error_message`]; the pointer
//! stays valid until the next failing call on the same thread.
//!
//! The committed header `include/strel.h` is generated with cbindgen
//! and kept in sync by the `header_sync` test.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use strel::logic::{eliminate_intervals, parse};
use strel::monitor::{AnyAutomaton, AnyMonitor, Semantics};
use strel::spatial::Universe;
use strel::trace::{record_to_model, StepRecord, TraceHeader};
use strel::algebra::{AlgebraValue, DistanceRegistry};

/// Result of a fallible call.
#[repr(C)]
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum StrelStatus {
    StrelOk = 0,
    /// A null pointer, malformed UTF-8, or an argument that violates the
    /// documented contract.
    StrelInvalidArgument = 1,
    /// The specification failed to parse or elaborate.
    StrelParseError = 2,
    /// A trace header or step record was rejected.
    StrelTraceError = 3,
    /// Anything else, including internal panics.
    StrelRuntimeError = 4,
}

/// Which semantics a monitor evaluates.
#[repr(C)]
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum StrelSemantics {
    StrelSemanticsBool = 0,
    StrelSemanticsRobust = 1,
}

/// An online monitor for one specification at one ego location.
pub struct StrelMonitor {
    inner: AnyMonitor,
    universe: std::sync::Arc<Universe>,
    undirected: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg).unwrap_or_else(|_| c"error message had a nul byte".to_owned());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn fail(status: StrelStatus, msg: String) -> StrelStatus {
    set_error(msg);
    status
}

/// Runs a fallible body, turning panics into `StrelRuntimeError`.
fn guarded(body: impl FnOnce() -> StrelStatus) -> StrelStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(StrelStatus::StrelRuntimeError, "internal panic".to_string()),
    }
}

/// # Safety
/// `ptr` must be null or a valid nul-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, String> {
    if ptr.is_null() {
        return Err("null string argument".to_string());
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|e| format!("argument is not UTF-8: {e}"))
}

/// Message of the last failing call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn strel_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow().as_ref().map_or(ptr::null(), |msg| msg.as_ptr())
    })
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn strel_version() -> *const c_char {
    static VERSION: &CStr = c"0.1.0";
    VERSION.as_ptr()
}

/// Creates a monitor from a specification, the trace header line (JSON),
/// an ego location name, and the semantics. Returns null on error; see
/// [`strel_last_error_message`]. Free with [`strel_monitor_free`].
///
/// # Safety
/// `spec`, `header_json` and `ego` must be valid nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn strel_monitor_new(
    spec: *const c_char,
    header_json: *const c_char,
    ego: *const c_char,
    semantics: StrelSemantics,
) -> *mut StrelMonitor {
    let mut out = ptr::null_mut();
    let status = guarded(|| {
        let (spec, header, ego) = match (|| {
            Ok::<_, String>((
                unsafe { utf8_arg(spec) }?,
                unsafe { utf8_arg(header_json) }?,
                unsafe { utf8_arg(ego) }?,
            ))
        })() {
            Ok(args) => args,
            Err(msg) => return fail(StrelStatus::StrelInvalidArgument, msg),
        };
        let formula = match parse(spec.trim()) {
            Ok(f) => f,
            Err(e) => return fail(StrelStatus::StrelParseError, format!("specification: {e}")),
        };
        let header: TraceHeader = match serde_json::from_str(header) {
            Ok(h) => h,
            Err(e) => return fail(StrelStatus::StrelTraceError, format!("trace header: {e}")),
        };
        let universe = match Universe::new(header.universe.clone()) {
            Ok(u) => u,
            Err(e) => return fail(StrelStatus::StrelTraceError, format!("universe: {e}")),
        };
        let Some(ego_id) = universe.index_of(ego) else {
            return fail(
                StrelStatus::StrelInvalidArgument,
                format!("unknown ego location `{ego}`"),
            );
        };
        let semantics = match semantics {
            StrelSemantics::StrelSemanticsBool => Semantics::Bool,
            StrelSemantics::StrelSemanticsRobust => Semantics::Robust,
        };
        let aut = match AnyAutomaton::build(
            semantics,
            &eliminate_intervals(&formula),
            universe.clone(),
            DistanceRegistry::builtin(),
        ) {
            Ok(a) => a,
            Err(e) => return fail(StrelStatus::StrelParseError, format!("automaton: {e}")),
        };
        let inner = match aut.monitor(ego_id) {
            Ok(m) => m,
            Err(e) => return fail(StrelStatus::StrelRuntimeError, e.to_string()),
        };
        out = Box::into_raw(Box::new(StrelMonitor {
            inner,
            universe,
            undirected: header.undirected,
        }));
        StrelStatus::StrelOk
    });
    if status == StrelStatus::StrelOk {
        out
    } else {
        ptr::null_mut()
    }
}

/// # Safety
/// `m` must be a pointer returned by [`strel_monitor_new`], not yet freed.
unsafe fn monitor_arg<'a>(m: *mut StrelMonitor) -> Result<&'a mut StrelMonitor, String> {
    if m.is_null() {
        Err("null monitor handle".to_string())
    } else {
        Ok(unsafe { &mut *m })
    }
}

/// Feeds one step record (a trace JSONL line). Records must arrive in
/// order: the record's `t` must equal the number of steps consumed.
///
/// # Safety
/// `m` is a live monitor handle; `step_json` is a valid nul-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn strel_monitor_step_json(
    m: *mut StrelMonitor,
    step_json: *const c_char,
) -> StrelStatus {
    guarded(|| {
        let monitor = match unsafe { monitor_arg(m) } {
            Ok(m) => m,
            Err(msg) => return fail(StrelStatus::StrelInvalidArgument, msg),
        };
        let line = match unsafe { utf8_arg(step_json) } {
            Ok(s) => s,
            Err(msg) => return fail(StrelStatus::StrelInvalidArgument, msg),
        };
        let record: StepRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return fail(StrelStatus::StrelTraceError, format!("step record: {e}")),
        };
        if record.t != monitor.inner.steps() {
            return fail(
                StrelStatus::StrelTraceError,
                format!("expected t={}, got t={}", monitor.inner.steps(), record.t),
            );
        }
        let model = match record_to_model(&monitor.universe, &record, monitor.undirected) {
            Ok(m) => m,
            Err(e) => return fail(StrelStatus::StrelTraceError, format!("step record: {e}")),
        };
        match monitor.inner.step(&model) {
            Ok(()) => StrelStatus::StrelOk,
            Err(e) => fail(StrelStatus::StrelRuntimeError, e.to_string()),
        }
    })
}

/// Number of steps consumed so far.
///
/// # Safety
/// `m` is a live monitor handle.
#[no_mangle]
pub unsafe extern "C" fn strel_monitor_steps(m: *mut StrelMonitor) -> u64 {
    unsafe { monitor_arg(m) }.map_or(0, |monitor| monitor.inner.steps())
}

/// True once no further input can change the verdict.
///
/// # Safety
/// `m` is a live monitor handle.
#[no_mangle]
pub unsafe extern "C" fn strel_monitor_is_conclusive(m: *mut StrelMonitor) -> bool {
    unsafe { monitor_arg(m) }.map_or(false, |monitor| monitor.inner.is_conclusive())
}

/// Current success verdict under either semantics: the Boolean value, or
/// strictly positive robustness.
///
/// # Safety
/// `m` is a live monitor handle; `out` is a valid destination.
#[no_mangle]
pub unsafe extern "C" fn strel_monitor_bool_value(
    m: *mut StrelMonitor,
    out: *mut bool,
) -> StrelStatus {
    guarded(|| {
        let monitor = match unsafe { monitor_arg(m) } {
            Ok(m) => m,
            Err(msg) => return fail(StrelStatus::StrelInvalidArgument, msg),
        };
        if out.is_null() {
            return fail(StrelStatus::StrelInvalidArgument, "null out pointer".to_string());
        }
        unsafe { *out = monitor.inner.current_value().is_success() };
        StrelStatus::StrelOk
    })
}

/// Current robustness value. Fails on a Boolean-semantics monitor.
///
/// # Safety
/// `m` is a live monitor handle; `out` is a valid destination.
#[no_mangle]
pub unsafe extern "C" fn strel_monitor_robust_value(
    m: *mut StrelMonitor,
    out: *mut f64,
) -> StrelStatus {
    guarded(|| {
        let monitor = match unsafe { monitor_arg(m) } {
            Ok(m) => m,
            Err(msg) => return fail(StrelStatus::StrelInvalidArgument, msg),
        };
        if out.is_null() {
            return fail(StrelStatus::StrelInvalidArgument, "null out pointer".to_string());
        }
        match monitor.inner.current_value() {
            AlgebraValue::Real(r) => {
                unsafe { *out = r };
                StrelStatus::StrelOk
            }
            AlgebraValue::Bool(_) => fail(
                StrelStatus::StrelInvalidArgument,
                "monitor runs Boolean semantics; use strel_monitor_bool_value".to_string(),
            ),
        }
    })
}

/// Serializes the monitor state. Free the result with
/// [`strel_string_free`]. Returns null on error.
///
/// # Safety
/// `m` is a live monitor handle.
#[no_mangle]
pub unsafe extern "C" fn strel_monitor_snapshot(m: *mut StrelMonitor) -> *mut c_char {
    let mut out = ptr::null_mut();
    let status = guarded(|| {
        let monitor = match unsafe { monitor_arg(m) } {
            Ok(m) => m,
            Err(msg) => return fail(StrelStatus::StrelInvalidArgument, msg),
        };
        match CString::new(monitor.inner.snapshot()) {
            Ok(s) => {
                out = s.into_raw();
                StrelStatus::StrelOk
            }
            Err(e) => fail(StrelStatus::StrelRuntimeError, e.to_string()),
        }
    });
    if status == StrelStatus::StrelOk {
        out
    } else {
        ptr::null_mut()
    }
}

/// Restores a snapshot taken from a monitor of the same specification
/// and universe.
///
/// # Safety
/// `m` is a live monitor handle; `snapshot` is a valid nul-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn strel_monitor_restore(
    m: *mut StrelMonitor,
    snapshot: *const c_char,
) -> StrelStatus {
    guarded(|| {
        let monitor = match unsafe { monitor_arg(m) } {
            Ok(m) => m,
            Err(msg) => return fail(StrelStatus::StrelInvalidArgument, msg),
        };
        let text = match unsafe { utf8_arg(snapshot) } {
            Ok(s) => s,
            Err(msg) => return fail(StrelStatus::StrelInvalidArgument, msg),
        };
        match monitor.inner.restore(text) {
            Ok(()) => StrelStatus::StrelOk,
            Err(e) => fail(StrelStatus::StrelRuntimeError, format!("restore: {e}")),
        }
    })
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn strel_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Frees a monitor. Null is a no-op.
///
/// # Safety
/// `m` must come from [`strel_monitor_new`] and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn strel_monitor_free(m: *mut StrelMonitor) {
    if !m.is_null() {
        drop(unsafe { Box::from_raw(m) });
    }
}
