use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio::sync::oneshot;

use super::{ws, AppState, EngineMsg};
use crate::command::{parse_command, DIRECT_GRAMMAR};
use crate::engine::EventPayload;
use crate::ingest::parse_datagram;
use crate::wire::{CommandBody, ErrorBody, MoveBody, SensorBody, StrokeBody, WireError};

#[derive(Debug)]
pub(super) struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { code: code.into(), message: message.into() } }
    }

    fn schema(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "schema", message)
    }

    fn no_session() -> Self {
        Self::new(StatusCode::CONFLICT, "no_session", "session not started")
    }

    fn unavailable() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "unavailable", "engine is not running")
    }
}

impl From<WireError> for ApiError {
    fn from(e: WireError) -> Self {
        match e {
            WireError::TooManyPoints(_) => Self::new(StatusCode::PAYLOAD_TOO_LARGE, "too_large", e.to_string()),
            WireError::Schema(_) => Self::schema(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

#[derive(Debug, Serialize)]
pub(super) struct Accepted {
    pub correlation_id: u64,
    pub accepted: usize,
}

/// An input from any client, already decoded from its route or message.
pub(super) enum Input {
    Command(CommandBody),
    Stroke(StrokeBody),
    Move(MoveBody),
    Sensor(SensorBody),
}

/// Validates an input and queues it for the engine. Nothing else may
/// change the session.
pub(super) fn submit(state: &AppState, input: Input, correlation_id: Option<u64>) -> Result<Accepted, ApiError> {
    let current = state.current().ok_or_else(ApiError::no_session)?;
    let payloads = match input {
        Input::Command(body) => {
            let cmd = parse_command(&body.text).map_err(|e| ApiError::schema(e.to_string()))?;
            vec![EventPayload::CommandIssued(cmd)]
        }
        Input::Stroke(body) => {
            let stroke = body.into_stroke()?;
            stroke.validate(&current.config.canvas).map_err(|e| ApiError::schema(e.to_string()))?;
            vec![EventPayload::ArtistStroke(stroke)]
        }
        Input::Move(body) => vec![EventPayload::RobotMoved(body.into_position()?)],
        Input::Sensor(body) => {
            let mut out = Vec::new();
            for chunk in &body.lines {
                for parsed in parse_datagram(chunk.as_bytes()) {
                    out.push(EventPayload::SampleIn(parsed.map_err(|e| ApiError::schema(e.to_string()))?));
                }
            }
            out
        }
    };
    let correlation_id = correlation_id.unwrap_or_else(|| state.correlation_id());
    let accepted = payloads.len();
    for payload in payloads {
        if !state.send(EngineMsg::Input { payload, correlation_id }) {
            return Err(ApiError::unavailable());
        }
    }
    Ok(Accepted { correlation_id, accepted })
}

fn decode<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::schema(e.to_string()))
}

fn accepted(r: Result<Accepted, ApiError>) -> Response {
    match r {
        Ok(a) => (StatusCode::ACCEPTED, Json(a)).into_response(),
        Err(e) => e.into_response(),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/state", get(get_state))
        .route("/canvas.ppm", get(get_canvas))
        .route("/grammar", get(get_grammar))
        .route("/command", post(post_command))
        .route("/artist/stroke", post(post_stroke))
        .route("/robot/move", post(post_move))
        .route("/sensor", post(post_sensor))
        .route("/session/start", post(post_start))
        .route("/session/reset", post(post_reset))
        .route("/ws", get(ws::handler))
        .layer(DefaultBodyLimit::max(16 * 1024 * 1024))
        .with_state(state)
}

async fn get_state(State(state): State<AppState>) -> Response {
    match state.current() {
        Some(c) => Json(&*c.snapshot).into_response(),
        None => ApiError::no_session().into_response(),
    }
}

async fn get_canvas(State(state): State<AppState>) -> Response {
    let (reply, rx) = oneshot::channel();
    if !state.send(EngineMsg::Ppm { reply }) {
        return ApiError::unavailable().into_response();
    }
    match rx.await {
        Ok(Some(bytes)) => ([(header::CONTENT_TYPE, "image/x-portable-pixmap")], bytes).into_response(),
        Ok(None) => ApiError::no_session().into_response(),
        Err(_) => ApiError::unavailable().into_response(),
    }
}

#[derive(Serialize)]
struct GrammarEntry {
    phrase: &'static str,
    command: crate::command::DirectCommand,
}

async fn get_grammar() -> Json<Vec<GrammarEntry>> {
    Json(DIRECT_GRAMMAR.iter().map(|&(phrase, command)| GrammarEntry { phrase, command }).collect())
}

async fn post_command(State(state): State<AppState>, body: Bytes) -> Response {
    accepted(decode(&body).and_then(|b| submit(&state, Input::Command(b), None)))
}

async fn post_stroke(State(state): State<AppState>, body: Bytes) -> Response {
    accepted(decode(&body).and_then(|b| submit(&state, Input::Stroke(b), None)))
}

async fn post_move(State(state): State<AppState>, body: Bytes) -> Response {
    accepted(decode(&body).and_then(|b| submit(&state, Input::Move(b), None)))
}

async fn post_sensor(State(state): State<AppState>, body: Bytes) -> Response {
    accepted(decode(&body).and_then(|b| submit(&state, Input::Sensor(b), None)))
}

pub(super) async fn start(state: &AppState, overrides: serde_json::Value) -> Result<serde_json::Value, ApiError> {
    if !overrides.is_object() {
        return Err(ApiError::schema("config overrides must be a JSON object"));
    }
    let (reply, rx) = oneshot::channel();
    if !state.send(EngineMsg::Start { overrides, reply }) {
        return Err(ApiError::unavailable());
    }
    match rx.await {
        Ok(Ok(snapshot)) => Ok(serde_json::json!({ "started": true, "snapshot": &*snapshot })),
        Ok(Err(msg)) => Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_config", msg)),
        Err(_) => Err(ApiError::unavailable()),
    }
}

pub(super) async fn reset(state: &AppState) -> Result<serde_json::Value, ApiError> {
    let (reply, rx) = oneshot::channel();
    if !state.send(EngineMsg::Reset { reply }) {
        return Err(ApiError::unavailable());
    }
    match rx.await {
        Ok(Ok(snapshot)) => Ok(serde_json::json!({ "started": true, "snapshot": &*snapshot })),
        Ok(Err(_)) => Err(ApiError::no_session()),
        Err(_) => Err(ApiError::unavailable()),
    }
}

async fn post_start(State(state): State<AppState>, body: Bytes) -> Response {
    let overrides = if body.iter().all(u8::is_ascii_whitespace) { Ok(serde_json::json!({})) } else { decode(&body) };
    match overrides {
        Ok(o) => match start(&state, o).await {
            Ok(v) => Json(v).into_response(),
            Err(e) => e.into_response(),
        },
        Err(e) => e.into_response(),
    }
}

async fn post_reset(State(state): State<AppState>) -> Response {
    match reset(&state).await {
        Ok(v) => Json(v).into_response(),
        Err(e) => e.into_response(),
    }
}
