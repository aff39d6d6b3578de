//! C ABI over the session engine.
//!
//! Every function returns an [`AuraStatus`] (or a null pointer) and never
//! unwinds across the boundary. On failure, [`aura_last_error`] describes
//! what went wrong on the calling thread. Strings and byte buffers handed
//! out by the library must be released with [`aura_string_free`] and
//! [`aura_bytes_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use aura_core::command::parse_command;
use aura_core::engine::RobotPosition;
use aura_core::ingest::parse_sensor_line;
use aura_core::scenario::Scenario;
use aura_core::wire::StrokeBody;
use aura_core::{Engine, EventPayload, Mode, SessionConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuraStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Engine = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuraMode {
    Idle = 0,
    Calibrating = 1,
    Painting = 2,
    Refill = 3,
    Withdrawn = 4,
    Paused = 5,
    Stopped = 6,
}

impl From<Mode> for AuraMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Idle => AuraMode::Idle,
            Mode::Calibrating => AuraMode::Calibrating,
            Mode::Painting => AuraMode::Painting,
            Mode::Refill => AuraMode::Refill,
            Mode::Withdrawn => AuraMode::Withdrawn,
            Mode::Paused => AuraMode::Paused,
            Mode::Stopped => AuraMode::Stopped,
        }
    }
}

/// Opaque session handle.
pub struct AuraSession {
    engine: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type FfiResult<T> = Result<T, (AuraStatus, String)>;

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> AuraStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AuraStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AuraStatus::Panic
        }
    }
}

fn guard_ptr<T>(f: impl FnOnce() -> FfiResult<*mut T>) -> *mut T {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(p)) => p,
        Ok(Err((_, msg))) => {
            set_error(msg);
            ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            ptr::null_mut()
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err((AuraStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (AuraStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn session_mut<'a>(s: *mut AuraSession) -> FfiResult<&'a mut AuraSession> {
    s.as_mut().ok_or((AuraStatus::NullArgument, "session is null".into()))
}

unsafe fn session_ref<'a>(s: *const AuraSession) -> FfiResult<&'a AuraSession> {
    s.as_ref().ok_or((AuraStatus::NullArgument, "session is null".into()))
}

fn invalid(e: impl ToString) -> (AuraStatus, String) {
    (AuraStatus::InvalidArgument, e.to_string())
}

fn engine_err(e: impl ToString) -> (AuraStatus, String) {
    (AuraStatus::Engine, e.to_string())
}

fn to_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s).map(CString::into_raw).map_err(invalid)
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn aura_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a session. `config_json` holds config overrides and may be null
/// for defaults. Returns null on failure.
///
/// # Safety
/// `config_json` must be null or a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aura_session_new(config_json: *const c_char) -> *mut AuraSession {
    guard_ptr(|| {
        let cfg = if config_json.is_null() {
            SessionConfig::default()
        } else {
            let text = str_arg(config_json, "config_json")?;
            let overrides: serde_json::Value = serde_json::from_str(text).map_err(invalid)?;
            SessionConfig::default().with_overrides(&overrides).map_err(invalid)?
        };
        let engine = Engine::new(cfg).map_err(invalid)?;
        Ok(Box::into_raw(Box::new(AuraSession { engine })))
    })
}

/// # Safety
/// `session` must be null or a handle from [`aura_session_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aura_session_free(session: *mut AuraSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

fn enqueue(s: &mut AuraSession, payload: EventPayload, at_ms: u64) -> FfiResult<()> {
    s.engine.enqueue(payload, at_ms).map_err(invalid)
}

/// Queues one `TAG,timestamp_ms,value` sensor line.
///
/// # Safety
/// `session` must be a live handle and `line` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aura_session_push_sensor_line(session: *mut AuraSession, line: *const c_char, at_ms: u64) -> AuraStatus {
    guard(|| {
        let s = session_mut(session)?;
        let sample = parse_sensor_line(str_arg(line, "line")?.as_bytes()).map_err(invalid)?;
        enqueue(s, EventPayload::SampleIn(sample), at_ms)
    })
}

/// Queues artist text: a direct command or a painting prompt.
///
/// # Safety
/// `session` must be a live handle and `text` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aura_session_command(session: *mut AuraSession, text: *const c_char, at_ms: u64) -> AuraStatus {
    guard(|| {
        let s = session_mut(session)?;
        let cmd = parse_command(str_arg(text, "text")?).map_err(invalid)?;
        enqueue(s, EventPayload::CommandIssued(cmd), at_ms)
    })
}

/// Queues a physical reposition. With `outside` set, the coordinates are
/// ignored.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aura_session_robot_move(session: *mut AuraSession, x_mm: f64, y_mm: f64, outside: bool, at_ms: u64) -> AuraStatus {
    guard(|| {
        let s = session_mut(session)?;
        let pos = if outside { RobotPosition::Outside } else { RobotPosition::At { x_mm, y_mm } };
        enqueue(s, EventPayload::RobotMoved(pos), at_ms)
    })
}

/// Queues an artist stroke given as `{"color":[r,g,b],"width_mm":w,"path":[[x,y],...]}`.
///
/// # Safety
/// `session` must be a live handle and `stroke_json` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aura_session_artist_stroke_json(session: *mut AuraSession, stroke_json: *const c_char, at_ms: u64) -> AuraStatus {
    guard(|| {
        let s = session_mut(session)?;
        let body: StrokeBody = serde_json::from_str(str_arg(stroke_json, "stroke_json")?).map_err(invalid)?;
        let stroke = body.into_stroke().map_err(invalid)?;
        enqueue(s, EventPayload::ArtistStroke(stroke), at_ms)
    })
}

/// Commits queued inputs and one tick at `now_ms`. The number of committed
/// events is written to `out_events` when it is not null.
///
/// # Safety
/// `session` must be a live handle; `out_events` null or writable.
#[no_mangle]
pub unsafe extern "C" fn aura_session_step(session: *mut AuraSession, now_ms: u64, out_events: *mut u64) -> AuraStatus {
    guard(|| {
        let s = session_mut(session)?;
        let evs = s.engine.step(now_ms).map_err(engine_err)?;
        if let Some(out) = out_events.as_mut() {
            *out = evs.len() as u64;
        }
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aura_session_mode(session: *const AuraSession, out: *mut AuraMode) -> AuraStatus {
    guard(|| {
        let s = session_ref(session)?;
        let out = out.as_mut().ok_or((AuraStatus::NullArgument, "out is null".to_string()))?;
        *out = s.engine.session().mode().into();
        Ok(())
    })
}

/// FNV-1a 64 digest of the canvas RGB bytes.
///
/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aura_session_digest(session: *const AuraSession, out: *mut u64) -> AuraStatus {
    guard(|| {
        let s = session_ref(session)?;
        let out = out.as_mut().ok_or((AuraStatus::NullArgument, "out is null".to_string()))?;
        *out = s.engine.session().canvas().digest();
        Ok(())
    })
}

/// Snapshot as JSON; free with [`aura_string_free`]. Null on failure.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aura_session_snapshot_json(session: *const AuraSession) -> *mut c_char {
    guard_ptr(|| {
        let s = session_ref(session)?;
        to_c_string(serde_json::to_string(&s.engine.session().snapshot()).map_err(engine_err)?)
    })
}

/// Canvas as P6 PPM bytes; free with [`aura_bytes_free`].
///
/// # Safety
/// `session` must be a live handle; `out` and `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn aura_session_canvas_ppm(session: *const AuraSession, out: *mut *mut u8, out_len: *mut usize) -> AuraStatus {
    guard(|| {
        let s = session_ref(session)?;
        if out.is_null() || out_len.is_null() {
            return Err((AuraStatus::NullArgument, "out is null".into()));
        }
        let bytes = s.engine.session().canvas().export_ppm().into_boxed_slice();
        *out_len = bytes.len();
        *out = Box::into_raw(bytes) as *mut u8;
        Ok(())
    })
}

/// Runs a scenario (JSON text) headlessly and returns its summary as JSON;
/// free with [`aura_string_free`]. Null on failure.
///
/// # Safety
/// `scenario_json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aura_run_scenario_json(scenario_json: *const c_char) -> *mut c_char {
    guard_ptr(|| {
        let scenario = Scenario::from_json(str_arg(scenario_json, "scenario_json")?).map_err(invalid)?;
        let run = scenario.run(&SessionConfig::default(), true).map_err(|e| match e.exit_code() {
            2 => invalid(e),
            _ => engine_err(e),
        })?;
        to_c_string(serde_json::to_string(&run.report).map_err(engine_err)?)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aura_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `bytes`/`len` must be null or exactly a buffer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn aura_bytes_free(bytes: *mut u8, len: usize) {
    if !bytes.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(bytes, len)));
    }
}
