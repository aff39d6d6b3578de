use std::ffi::{CStr, CString};
use std::ptr;

use aura_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = aura_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn session_lifecycle() {
    unsafe {
        let s = aura_session_new(ptr::null());
        assert!(!s.is_null());
        let mut mode = AuraMode::Painting;
        assert_eq!(aura_session_mode(s, &mut mode), AuraStatus::Ok);
        assert_eq!(mode, AuraMode::Idle);

        for t in 0..=30u64 {
            let line = c(&format!("HR,{},70", t * 1000));
            assert_eq!(aura_session_push_sensor_line(s, line.as_ptr(), t * 1000), AuraStatus::Ok);
            let mut n = 0;
            assert_eq!(aura_session_step(s, t * 1000, &mut n), AuraStatus::Ok);
            assert!(n >= 2);
        }
        assert_eq!(aura_session_mode(s, &mut mode), AuraStatus::Ok);
        assert_eq!(mode, AuraMode::Painting);

        let stroke = c(r#"{"color":[0,0,255],"width_mm":3,"path":[[10,10],[60,40]]}"#);
        assert_eq!(aura_session_artist_stroke_json(s, stroke.as_ptr(), 31_000), AuraStatus::Ok);
        let stop = c("Stop");
        assert_eq!(aura_session_command(s, stop.as_ptr(), 31_000), AuraStatus::Ok);
        assert_eq!(aura_session_step(s, 31_100, ptr::null_mut()), AuraStatus::Ok);
        assert_eq!(aura_session_mode(s, &mut mode), AuraStatus::Ok);
        assert_eq!(mode, AuraMode::Stopped);

        let mut digest = 0u64;
        assert_eq!(aura_session_digest(s, &mut digest), AuraStatus::Ok);
        let snap = aura_session_snapshot_json(s);
        assert!(!snap.is_null());
        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(snap).to_str().unwrap()).unwrap();
        assert_eq!(json["mode"], "Stopped");
        assert_eq!(json["canvas_digest"], format!("{digest:016x}"));
        aura_string_free(snap);

        let mut bytes = ptr::null_mut();
        let mut len = 0usize;
        assert_eq!(aura_session_canvas_ppm(s, &mut bytes, &mut len), AuraStatus::Ok);
        let ppm = std::slice::from_raw_parts(bytes, len);
        assert!(ppm.starts_with(b"P6\n560 432\n255\n"));
        assert_eq!(len, 15 + 560 * 432 * 3);
        aura_bytes_free(bytes, len);

        aura_robot_move_outside(s);
        aura_session_free(s);
    }
}

unsafe fn aura_robot_move_outside(s: *mut AuraSession) {
    assert_eq!(aura_session_robot_move(s, 0.0, 0.0, true, 40_000), AuraStatus::Ok);
    assert_eq!(aura_session_step(s, 40_000, ptr::null_mut()), AuraStatus::Ok);
    let mut mode = AuraMode::Idle;
    aura_session_mode(s, &mut mode);
    assert_eq!(mode, AuraMode::Stopped);
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        assert_eq!(aura_session_step(ptr::null_mut(), 0, ptr::null_mut()), AuraStatus::NullArgument);
        assert!(last_error().contains("null"));

        let s = aura_session_new(ptr::null());
        let bad = c("XX,1,2");
        assert_eq!(aura_session_push_sensor_line(s, bad.as_ptr(), 0), AuraStatus::InvalidArgument);
        assert!(last_error().to_lowercase().contains("tag"), "{}", last_error());
        let empty = c("   ");
        assert_eq!(aura_session_command(s, empty.as_ptr(), 0), AuraStatus::InvalidArgument);
        let oob = c(r#"{"path":[[10,10],[900,10]]}"#);
        assert_eq!(aura_session_artist_stroke_json(s, oob.as_ptr(), 0), AuraStatus::InvalidArgument);
        let invalid_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(aura_session_command(s, invalid_utf8.as_ptr().cast(), 0), AuraStatus::InvalidUtf8);
        let mut mode = AuraMode::Idle;
        assert_eq!(aura_session_mode(s, &mut mode), AuraStatus::Ok);
        assert!(aura_last_error().is_null(), "success clears the error");
        aura_session_free(s);

        let bad_cfg = c(r#"{"tick_ms":0}"#);
        assert!(aura_session_new(bad_cfg.as_ptr()).is_null());
        let unknown = c(r#"{"nope":1}"#);
        assert!(aura_session_new(unknown.as_ptr()).is_null());
        aura_session_free(ptr::null_mut());
        aura_string_free(ptr::null_mut());
    }
}

#[test]
fn scenario_summary() {
    unsafe {
        let sc = c(r#"{"name":"empty"}"#);
        let out = aura_run_scenario_json(sc.as_ptr());
        assert!(!out.is_null());
        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        assert_eq!(json["final_mode"], "Idle");
        aura_string_free(out);
        let bad = c(r#"{"name":"x","events":[{"t_ms":5,"kind":"hr","payload":{"bpm":70}},{"t_ms":1,"kind":"hr","payload":{"bpm":70}}]}"#);
        assert!(aura_run_scenario_json(bad.as_ptr()).is_null());
        assert!(last_error().contains("backwards"));
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/aura.h")).unwrap();
    for f in [
        "aura_last_error",
        "aura_session_new",
        "aura_session_free",
        "aura_session_push_sensor_line",
        "aura_session_command",
        "aura_session_robot_move",
        "aura_session_artist_stroke_json",
        "aura_session_step",
        "aura_session_mode",
        "aura_session_digest",
        "aura_session_snapshot_json",
        "aura_session_canvas_ppm",
        "aura_run_scenario_json",
        "aura_string_free",
        "aura_bytes_free",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct AuraSession AuraSession;"));
    assert!(header.contains("AURA_STATUS_OK = 0"));
}
