//! JSON bodies shared by the HTTP API, the WebSocket stream and scenario
//! files. Client bodies reject unknown fields.

use serde::{Deserialize, Serialize};

use crate::canvas::{Author, Point, Stroke};
use crate::engine::{RobotPosition, SessionEvent, Snapshot};

/// Strokes longer than this are refused outright.
pub const MAX_STROKE_POINTS: usize = 10_000;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WireError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("stroke has {0} points (limit {MAX_STROKE_POINTS})")]
    TooManyPoints(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandBody {
    pub text: String,
}

fn default_width() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrokeBody {
    #[serde(default)]
    pub color: [u8; 3],
    #[serde(default = "default_width")]
    pub width_mm: f64,
    pub path: Vec<Point>,
}

impl StrokeBody {
    /// Id and author are placeholders; the engine assigns both at commit.
    pub fn into_stroke(self) -> Result<Stroke, WireError> {
        if self.path.len() > MAX_STROKE_POINTS {
            return Err(WireError::TooManyPoints(self.path.len()));
        }
        Ok(Stroke { id: 0, author: Author::Artist, color: self.color, width_mm: self.width_mm, path: self.path })
    }
}

/// `{"x_mm": .., "y_mm": ..}` or `{"outside": true}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MoveBody {
    At {
        x_mm: f64,
        y_mm: f64,
    },
    Outside {
        outside: bool,
    },
}

impl MoveBody {
    pub fn into_position(self) -> Result<RobotPosition, WireError> {
        match self {
            MoveBody::At { x_mm, y_mm } if x_mm.is_finite() && y_mm.is_finite() => Ok(RobotPosition::At { x_mm, y_mm }),
            MoveBody::At { .. } => Err(WireError::Schema("coordinates must be finite".into())),
            MoveBody::Outside { outside: true } => Ok(RobotPosition::Outside),
            MoveBody::Outside { outside: false } => Err(WireError::Schema("use x_mm/y_mm for in-bounds moves".into())),
        }
    }
}

/// Sensor lines in the UDP wire format; an element may hold several
/// newline-separated lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorBody {
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Snapshot {
        payload: Box<Snapshot>,
    },
    Event {
        seq: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correlation_id: Option<u64>,
        payload: SessionEvent,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correlation_id: Option<u64>,
        payload: ErrorBody,
    },
}

/// Client to server over the socket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Command {
        #[serde(default)]
        correlation_id: Option<u64>,
        payload: CommandBody,
    },
    ArtistStroke {
        #[serde(default)]
        correlation_id: Option<u64>,
        payload: StrokeBody,
    },
    RobotMove {
        #[serde(default)]
        correlation_id: Option<u64>,
        payload: MoveBody,
    },
    Sensor {
        #[serde(default)]
        correlation_id: Option<u64>,
        payload: SensorBody,
    },
    Start {
        #[serde(default)]
        correlation_id: Option<u64>,
        #[serde(default)]
        payload: serde_json::Value,
    },
    Reset {
        #[serde(default)]
        correlation_id: Option<u64>,
    },
}

impl ClientMessage {
    pub fn correlation_id(&self) -> Option<u64> {
        match self {
            ClientMessage::Command { correlation_id, .. }
            | ClientMessage::ArtistStroke { correlation_id, .. }
            | ClientMessage::RobotMove { correlation_id, .. }
            | ClientMessage::Sensor { correlation_id, .. }
            | ClientMessage::Start { correlation_id, .. }
            | ClientMessage::Reset { correlation_id } => *correlation_id,
        }
    }
}
