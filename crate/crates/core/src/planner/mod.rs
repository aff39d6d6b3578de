//! Procedural stroke planning, zone filtering and repositioning.
//!
//! Prompts are matched against a small parametric pattern library; the plan
//! is then split into strokes the current zone policy lets the robot paint
//! (`pending`) and strokes held back until the policy changes (`deferred`).

mod patterns;

use serde::{Deserialize, Serialize};

use crate::canvas::{quadrant_of, CanvasError, CanvasSpec, Point, Quadrant, QuadrantSet, Stroke, ZonePolicy};

pub use patterns::{Pattern, PATTERNS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlannerError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("no pattern in the library matches {0:?}")]
    UnknownPattern(String),
    #[error("palette is empty")]
    EmptyPalette,
    #[error(transparent)]
    Canvas(#[from] CanvasError),
}

/// Area a plan is laid out in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Whole,
    Quadrant(Quadrant),
}

impl Region {
    /// `(x0, y0, x1, y1)` in mm.
    pub fn rect(self, spec: &CanvasSpec) -> (f64, f64, f64, f64) {
        match self {
            Region::Whole => (0.0, 0.0, spec.width_mm, spec.height_mm),
            Region::Quadrant(q) => {
                let (hw, hh) = (spec.width_mm / 2.0, spec.height_mm / 2.0);
                let x0 = hw * f64::from(q.col);
                let y0 = hh * f64::from(q.row);
                (x0, y0, x0 + hw, y0 + hh)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokePlan {
    pub prompt: String,
    pub seed: u64,
    pub pending: Vec<Stroke>,
    pub deferred: Vec<Stroke>,
    pub palette_index: usize,
}

impl StrokePlan {
    pub fn empty() -> Self {
        Self { prompt: String::new(), seed: 0, pending: Vec::new(), deferred: Vec::new(), palette_index: 0 }
    }

    pub fn len(&self) -> usize {
        self.pending.len() + self.deferred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Builds a plan for the first library keyword found in `prompt`, laid out in
/// `region`, colored with `palette[palette_index % len]`. Stroke ids start at
/// `first_id`.
pub fn plan_from_prompt(
    prompt: &str,
    region: Region,
    palette: &[[u8; 3]],
    palette_index: usize,
    seed: u64,
    spec: &CanvasSpec,
    first_id: u64,
    stroke_width_mm: f64,
) -> Result<StrokePlan, PlannerError> {
    let prompt = prompt.trim();
    if prompt.is_empty() {
        return Err(PlannerError::EmptyPrompt);
    }
    if palette.is_empty() {
        return Err(PlannerError::EmptyPalette);
    }
    let lower = prompt.to_lowercase();
    let pattern = PATTERNS
        .iter()
        .filter_map(|p| lower.find(p.keyword()).map(|pos| (pos, *p)))
        .min_by_key(|(pos, _)| *pos)
        .map(|(_, p)| p)
        .ok_or_else(|| PlannerError::UnknownPattern(prompt.to_string()))?;

    let color = palette[palette_index % palette.len()];
    let paths = pattern.paths(region.rect(spec), seed);
    let pending = paths
        .into_iter()
        .enumerate()
        .map(|(i, path)| Stroke {
            id: first_id + i as u64,
            author: crate::canvas::Author::Robot,
            color,
            width_mm: stroke_width_mm,
            path: path.into_iter().map(|p| clamp_to(spec, p)).collect(),
        })
        .collect::<Vec<_>>();
    for s in &pending {
        s.validate(spec)?;
    }
    Ok(StrokePlan { prompt: prompt.to_string(), seed, pending, deferred: Vec::new(), palette_index })
}

fn clamp_to(spec: &CanvasSpec, (x, y): Point) -> Point {
    (x.clamp(0.0, spec.width_mm), y.clamp(0.0, spec.height_mm))
}

/// Quadrants touched by the axis-aligned box around `a` and `b`, grown by
/// `margin` on every side and clipped to the canvas.
fn footprint(a: Point, b: Point, margin: f64, spec: &CanvasSpec) -> QuadrantSet {
    let x0 = (a.0.min(b.0) - margin).clamp(0.0, spec.width_mm);
    let x1 = (a.0.max(b.0) + margin).clamp(0.0, spec.width_mm);
    let y0 = (a.1.min(b.1) - margin).clamp(0.0, spec.height_mm);
    let y1 = (a.1.max(b.1) + margin).clamp(0.0, spec.height_mm);
    [(x0, y0), (x1, y0), (x0, y1), (x1, y1)]
        .into_iter()
        .filter_map(|p| quadrant_of(p, spec).ok())
        .collect()
}

/// Whether the robot may paint `stroke` under `allowed`: every path point
/// and every segment between them, widened by the brush radius plus one
/// pixel of rasterization slack, must stay inside allowed quadrants.
pub fn stroke_allowed(stroke: &Stroke, allowed: QuadrantSet, spec: &CanvasSpec) -> bool {
    if allowed.is_empty() {
        return false;
    }
    let radius_px = (stroke.width_mm * spec.px_per_mm / 2.0).ceil();
    let margin = (radius_px + 1.0) / spec.px_per_mm;
    let fits = |fp: QuadrantSet| fp.iter().all(|q| allowed.contains(q));
    match stroke.path.as_slice() {
        [] => false,
        [p] => fits(footprint(*p, *p, margin, spec)),
        path => path.windows(2).all(|w| fits(footprint(w[0], w[1], margin, spec))),
    }
}

/// Moves strokes the policy forbids to `deferred` and re-admits deferred
/// strokes it now allows. Admitted deferred strokes queue after the existing
/// pending ones; relative order is otherwise preserved.
pub fn filter_by_zones(plan: StrokePlan, policy: &ZonePolicy, spec: &CanvasSpec) -> StrokePlan {
    let StrokePlan { prompt, seed, pending, deferred, palette_index } = plan;
    let (pending, deferred): (Vec<_>, Vec<_>) = pending
        .into_iter()
        .chain(deferred)
        .partition(|s| stroke_allowed(s, policy.paint_allowed, spec));
    StrokePlan { prompt, seed, pending, deferred, palette_index }
}

/// Stable partition of `pending`: strokes starting in the quadrant of `pos` first.
pub fn reprioritize_for_position(plan: StrokePlan, pos: Point, spec: &CanvasSpec) -> Result<StrokePlan, PlannerError> {
    let target = quadrant_of(pos, spec)?;
    let StrokePlan { prompt, seed, pending, deferred, palette_index } = plan;
    let (mut front, back): (Vec<_>, Vec<_>) = pending
        .into_iter()
        .partition(|s| s.path.first().and_then(|p| quadrant_of(*p, spec).ok()) == Some(target));
    front.extend(back);
    Ok(StrokePlan { prompt, seed, pending: front, deferred, palette_index })
}
