use serde::{Deserialize, Serialize};

use super::event::{Mode, SessionEvent};
use crate::arousal::{ArousalState, Baseline};
use crate::canvas::{Point, Quadrant, QuadrantSet};
use crate::ingest::HeartRateEstimate;

/// Immutable, UI-facing summary of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub last_seq: u64,
    pub at_ms: u64,
    pub mode: Mode,
    pub robot_pos: Point,
    pub robot_outside: bool,
    pub last_hr: Option<HeartRateEstimate>,
    pub arousal: Option<ArousalState>,
    pub threshold_bpm: Option<f64>,
    pub baseline: Option<Baseline>,
    pub active_quadrant: Quadrant,
    pub paint_allowed: QuadrantSet,
    pub park: Option<Quadrant>,
    pub pending_count: usize,
    pub deferred_count: usize,
    pub palette_index: usize,
    pub paint_remaining_mm: f64,
    pub canvas_digest: String,
    pub robot_pixel_writes: u64,
    pub dropped_samples: u64,
    pub recent_events: Vec<SessionEvent>,
}
