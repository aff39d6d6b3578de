use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arousal::ArousalState;
use crate::canvas::{CanvasSpec, Point, Stroke, ZonePolicy};
use crate::command::Command;
use crate::ingest::{BiometricSample, HeartRateEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Idle,
    Calibrating,
    Painting,
    Refill,
    Withdrawn,
    Paused,
    Stopped,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Where the artist physically put the robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotPosition {
    At { x_mm: f64, y_mm: f64 },
    Outside,
}

impl RobotPosition {
    /// Normalizes coordinates off the canvas to `Outside`.
    pub fn resolve(self, spec: &CanvasSpec) -> Option<Point> {
        match self {
            RobotPosition::At { x_mm, y_mm } if spec.contains((x_mm, y_mm)) => Some((x_mm, y_mm)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum EventPayload {
    SampleIn(BiometricSample),
    HrUpdated(HeartRateEstimate),
    ArousalChanged(ArousalState),
    CommandIssued(Command),
    ArtistStroke(Stroke),
    RobotMoved(RobotPosition),
    Tick,
    StateChanged { from: Mode, to: Mode },
    PromptRejected { text: String },
    PaintRefilled,
    PolicyChanged(ZonePolicy),
    PlanStarted { prompt: String, strokes: usize, discarded: usize },
}

impl EventPayload {
    /// Inputs come from outside the engine; everything else is derived by
    /// folding inputs and is re-derived on replay.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            EventPayload::SampleIn(_)
                | EventPayload::CommandIssued(_)
                | EventPayload::ArtistStroke(_)
                | EventPayload::RobotMoved(_)
                | EventPayload::Tick
        )
    }

    /// Inputs that arrive within one tick are applied in ascending priority,
    /// so the highest-priority input has the last word: physical moves over
    /// direct commands over everything else. Arousal changes are derived from
    /// samples and therefore land between the two.
    pub fn priority(&self) -> u8 {
        match self {
            EventPayload::RobotMoved(_) => 3,
            EventPayload::CommandIssued(Command::Direct(_)) => 2,
            EventPayload::ArousalChanged(_) => 1,
            _ => 0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EventPayload::SampleIn(_) => "sample_in",
            EventPayload::HrUpdated(_) => "hr_updated",
            EventPayload::ArousalChanged(_) => "arousal_changed",
            EventPayload::CommandIssued(_) => "command_issued",
            EventPayload::ArtistStroke(_) => "artist_stroke",
            EventPayload::RobotMoved(_) => "robot_moved",
            EventPayload::Tick => "tick",
            EventPayload::StateChanged { .. } => "state_changed",
            EventPayload::PromptRejected { .. } => "prompt_rejected",
            EventPayload::PaintRefilled => "paint_refilled",
            EventPayload::PolicyChanged(_) => "policy_changed",
            EventPayload::PlanStarted { .. } => "plan_started",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub at_ms: u64,
    #[serde(flatten)]
    pub payload: EventPayload,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::DirectCommand;

    #[test]
    fn wire_shape() {
        let ev = SessionEvent { seq: 3, at_ms: 100, payload: EventPayload::Tick };
        assert_eq!(serde_json::to_string(&ev).unwrap(), r#"{"seq":3,"at_ms":100,"type":"tick"}"#);
        let ev = SessionEvent {
            seq: 4,
            at_ms: 100,
            payload: EventPayload::StateChanged { from: Mode::Painting, to: Mode::Stopped },
        };
        let j = serde_json::to_string(&ev).unwrap();
        assert_eq!(j, r#"{"seq":4,"at_ms":100,"type":"state_changed","payload":{"from":"Painting","to":"Stopped"}}"#);
        assert_eq!(serde_json::from_str::<SessionEvent>(&j).unwrap(), ev);
        let mv = EventPayload::RobotMoved(RobotPosition::Outside);
        assert_eq!(serde_json::to_string(&mv).unwrap(), r#"{"type":"robot_moved","payload":"outside"}"#);
    }

    #[test]
    fn priorities() {
        let direct = EventPayload::CommandIssued(Command::Direct(DirectCommand::Resume));
        let prompt = EventPayload::CommandIssued(Command::PaintPrompt("x".into()));
        let mv = EventPayload::RobotMoved(RobotPosition::Outside);
        assert!(mv.priority() > direct.priority());
        assert!(direct.priority() > prompt.priority());
        assert!(prompt.is_input() && !EventPayload::PaintRefilled.is_input());
    }

    #[test]
    fn off_canvas_coordinates_resolve_to_outside() {
        let s = CanvasSpec::default();
        assert_eq!(RobotPosition::At { x_mm: 10.0, y_mm: 10.0 }.resolve(&s), Some((10.0, 10.0)));
        assert_eq!(RobotPosition::At { x_mm: 300.0, y_mm: 10.0 }.resolve(&s), None);
        assert_eq!(RobotPosition::Outside.resolve(&s), None);
    }
}
