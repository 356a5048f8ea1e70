//! Drives the C ABI the way a foreign caller would: through the exported
//! functions and raw strings, including the error paths.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use strel_capi::{
    strel_last_error_message, strel_monitor_bool_value, strel_monitor_free,
    strel_monitor_is_conclusive, strel_monitor_new, strel_monitor_restore,
    strel_monitor_robust_value, strel_monitor_snapshot, strel_monitor_step_json,
    strel_monitor_steps, strel_string_free, strel_version, StrelMonitor, StrelSemantics,
    StrelStatus,
};

const HEADER: &str = r#"{"universe": ["a", "b"], "period_ms": 100, "undirected": true, "attributes": ["battery"]}"#;
const STEP0: &str = r#"{"t": 0, "nodes": [{"id": "a", "kind": "drone", "attrs": {"battery": 5.0}}, {"id": "b", "kind": "drone", "attrs": {"battery": 3.0}}], "edges": [{"src": "a", "w": 1.0, "dst": "b"}]}"#;
const STEP1: &str = r#"{"t": 1, "nodes": [{"id": "a", "kind": "drone", "attrs": {"battery": 2.0}}, {"id": "b", "kind": "drone", "attrs": {"battery": 7.0}}], "edges": []}"#;

fn cstr(s: &str) -> CString {
    CString::new(s).expect("no nul bytes")
}

fn last_error() -> String {
    let ptr = strel_last_error_message();
    assert!(!ptr.is_null(), "an error message was recorded");
    unsafe { CStr::from_ptr(ptr) }.to_str().expect("utf-8").to_string()
}

fn new_monitor(spec: &str, ego: &str, semantics: StrelSemantics) -> *mut StrelMonitor {
    let spec = cstr(spec);
    let header = cstr(HEADER);
    let ego = cstr(ego);
    unsafe { strel_monitor_new(spec.as_ptr(), header.as_ptr(), ego.as_ptr(), semantics) }
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(strel_version()) };
    assert_eq!(v.to_str().expect("utf-8"), "0.1.0");
}

#[test]
fn boolean_monitor_runs_a_trace() {
    let m = new_monitor("F battery >= 7", "b", StrelSemantics::StrelSemanticsBool);
    assert!(!m.is_null(), "monitor_new failed: {}", last_error());

    let mut verdict = false;
    unsafe {
        assert_eq!(strel_monitor_bool_value(m, &mut verdict), StrelStatus::StrelOk);
        assert!(!verdict, "F is false on the empty prefix");
        assert!(!strel_monitor_is_conclusive(m));

        let step0 = cstr(STEP0);
        assert_eq!(strel_monitor_step_json(m, step0.as_ptr()), StrelStatus::StrelOk);
        assert_eq!(strel_monitor_steps(m), 1);

        let step1 = cstr(STEP1);
        assert_eq!(strel_monitor_step_json(m, step1.as_ptr()), StrelStatus::StrelOk);
        assert!(strel_monitor_is_conclusive(m));
        assert_eq!(strel_monitor_bool_value(m, &mut verdict), StrelStatus::StrelOk);
        assert!(verdict);

        strel_monitor_free(m);
    }
}

#[test]
fn robust_monitor_reports_margins() {
    let m = new_monitor(
        "G somewhere[hops][0,1] battery >= 4",
        "a",
        StrelSemantics::StrelSemanticsRobust,
    );
    assert!(!m.is_null(), "monitor_new failed: {}", last_error());

    unsafe {
        let step0 = cstr(STEP0);
        assert_eq!(strel_monitor_step_json(m, step0.as_ptr()), StrelStatus::StrelOk);
        let step1 = cstr(STEP1);
        assert_eq!(strel_monitor_step_json(m, step1.as_ptr()), StrelStatus::StrelOk);

        // max(5,3)-4 = 1 at t0; t1 has no edge, so max is 2-4 = -2; G takes the min.
        let mut robustness = 0.0;
        assert_eq!(strel_monitor_robust_value(m, &mut robustness), StrelStatus::StrelOk);
        assert_eq!(robustness, -2.0);

        let mut verdict = true;
        assert_eq!(strel_monitor_bool_value(m, &mut verdict), StrelStatus::StrelOk);
        assert!(!verdict, "negative robustness is a failing verdict");

        strel_monitor_free(m);
    }
}

#[test]
fn snapshot_restore_roundtrip() {
    let m = new_monitor("battery >= 3 U battery >= 7", "b", StrelSemantics::StrelSemanticsBool);
    assert!(!m.is_null(), "monitor_new failed: {}", last_error());

    unsafe {
        let step0 = cstr(STEP0);
        assert_eq!(strel_monitor_step_json(m, step0.as_ptr()), StrelStatus::StrelOk);

        let snap = strel_monitor_snapshot(m);
        assert!(!snap.is_null());
        let text = CStr::from_ptr(snap).to_str().expect("utf-8").to_string();

        let step1 = cstr(STEP1);
        assert_eq!(strel_monitor_step_json(m, step1.as_ptr()), StrelStatus::StrelOk);
        let mut after_step1 = false;
        assert_eq!(strel_monitor_bool_value(m, &mut after_step1), StrelStatus::StrelOk);

        let restore = cstr(&text);
        assert_eq!(strel_monitor_restore(m, restore.as_ptr()), StrelStatus::StrelOk);
        let mut restored = false;
        assert_eq!(strel_monitor_bool_value(m, &mut restored), StrelStatus::StrelOk);
        assert!(!restored, "t=0 leaves the until pending, which cuts to false");
        assert!(after_step1, "t=1 satisfies the right-hand side");

        strel_string_free(snap);
        strel_monitor_free(m);
    }
}

#[test]
fn error_paths_set_messages() {
    // Parse error.
    let m = new_monitor("p U", "a", StrelSemantics::StrelSemanticsBool);
    assert!(m.is_null());
    assert!(last_error().contains("specification"), "got: {}", last_error());

    // Unknown ego.
    let m = new_monitor("G p", "z", StrelSemantics::StrelSemanticsBool);
    assert!(m.is_null());
    assert!(last_error().contains("unknown ego location"), "got: {}", last_error());

    // Null arguments.
    let m = unsafe {
        strel_monitor_new(
            ptr::null(),
            ptr::null(),
            ptr::null(),
            StrelSemantics::StrelSemanticsBool,
        )
    };
    assert!(m.is_null());

    let live = new_monitor("G p", "a", StrelSemantics::StrelSemanticsBool);
    assert!(!live.is_null());
    unsafe {
        // Out-of-order step.
        let bad = cstr(STEP1);
        assert_eq!(
            strel_monitor_step_json(live, bad.as_ptr()),
            StrelStatus::StrelTraceError
        );
        assert!(last_error().contains("expected t=0"), "got: {}", last_error());

        // Malformed record.
        let bad = cstr("{\"nope\": 1}");
        assert_eq!(
            strel_monitor_step_json(live, bad.as_ptr()),
            StrelStatus::StrelTraceError
        );

        // Robust read on a Boolean monitor.
        let mut robustness = 0.0;
        assert_eq!(
            strel_monitor_robust_value(live, &mut robustness),
            StrelStatus::StrelInvalidArgument
        );

        // Garbage snapshot.
        let bad = cstr("not a polynomial");
        assert_eq!(strel_monitor_restore(live, bad.as_ptr()), StrelStatus::StrelRuntimeError);

        // Null handle and null out-pointers are rejected, not UB.
        assert_eq!(
            strel_monitor_step_json(ptr::null_mut(), bad.as_ptr()),
            StrelStatus::StrelInvalidArgument
        );
        let mut verdict = false;
        assert_eq!(
            strel_monitor_bool_value(ptr::null_mut(), &mut verdict),
            StrelStatus::StrelInvalidArgument
        );
        assert_eq!(strel_monitor_bool_value(live, ptr::null_mut()), StrelStatus::StrelInvalidArgument);
        assert_eq!(strel_monitor_steps(ptr::null_mut()), 0);
        assert!(!strel_monitor_is_conclusive(ptr::null_mut()));

        strel_monitor_free(live);
        strel_monitor_free(ptr::null_mut());
        strel_string_free(ptr::null_mut::<c_char>());
    }
}
