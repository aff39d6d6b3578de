//! Canvas geometry, the four-quadrant partition, zone policy, strokes and
//! the provenance-tracking raster.

mod raster;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arousal::ArousalLevel;

pub use raster::{parse_ppm, supercover_line, Canvas, Provenance};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CanvasError {
    #[error("point ({0}, {1}) mm lies outside the canvas")]
    OutOfBounds(f64, f64),
    #[error("invalid canvas spec: {0}")]
    BadSpec(String),
    #[error("invalid stroke: {0}")]
    BadStroke(String),
    #[error("malformed PPM: {0}")]
    BadPpm(String),
}

pub type Point = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanvasSpec {
    pub width_mm: f64,
    pub height_mm: f64,
    pub px_per_mm: f64,
}

impl Default for CanvasSpec {
    fn default() -> Self {
        Self { width_mm: 280.0, height_mm: 216.0, px_per_mm: 2.0 }
    }
}

impl CanvasSpec {
    pub fn validate(&self) -> Result<(), CanvasError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.width_mm) && ok(self.height_mm) && ok(self.px_per_mm)) {
            return Err(CanvasError::BadSpec("dimensions must be positive and finite".into()));
        }
        let (w, h) = self.pixel_dims();
        if w < 2 || h < 2 {
            return Err(CanvasError::BadSpec(format!("{w}x{h} px is smaller than 2x2")));
        }
        Ok(())
    }

    pub fn pixel_dims(&self) -> (usize, usize) {
        (
            (self.width_mm * self.px_per_mm).round() as usize,
            (self.height_mm * self.px_per_mm).round() as usize,
        )
    }

    pub fn contains(&self, (x, y): Point) -> bool {
        (0.0..=self.width_mm).contains(&x) && (0.0..=self.height_mm).contains(&y)
    }

    pub fn center(&self) -> Point {
        (self.width_mm / 2.0, self.height_mm / 2.0)
    }

    /// Pixel holding a canvas point; points on the far edges land in the last pixel.
    pub fn to_pixel(&self, (x, y): Point) -> (i64, i64) {
        let (w, h) = self.pixel_dims();
        let px = ((x * self.px_per_mm).floor() as i64).clamp(0, w as i64 - 1);
        let py = ((y * self.px_per_mm).floor() as i64).clamp(0, h as i64 - 1);
        (px, py)
    }

    /// Quadrant of a pixel, judged by its centre with the same midline rule as
    /// [`quadrant_of`].
    pub fn pixel_quadrant(&self, px: usize, py: usize) -> Quadrant {
        let cx = (px as f64 + 0.5) / self.px_per_mm;
        let cy = (py as f64 + 0.5) / self.px_per_mm;
        Quadrant::new(u8::from(cx >= self.width_mm / 2.0), u8::from(cy >= self.height_mm / 2.0))
    }

    /// Centre of a quadrant in mm.
    pub fn quadrant_center(&self, q: Quadrant) -> Point {
        (
            self.width_mm * (0.25 + 0.5 * f64::from(q.col)),
            self.height_mm * (0.25 + 0.5 * f64::from(q.row)),
        )
    }
}

/// One quarter of the canvas. `col`/`row` 0 is left/top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Quadrant {
    pub col: u8,
    pub row: u8,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant { col: 0, row: 0 },
        Quadrant { col: 1, row: 0 },
        Quadrant { col: 0, row: 1 },
        Quadrant { col: 1, row: 1 },
    ];

    pub fn new(col: u8, row: u8) -> Self {
        assert!(col <= 1 && row <= 1, "quadrant index out of range");
        Self { col, row }
    }

    pub fn diagonal(self) -> Self {
        Self { col: 1 - self.col, row: 1 - self.row }
    }

    pub fn adjacent(self) -> [Self; 2] {
        [Self { col: 1 - self.col, row: self.row }, Self { col: self.col, row: 1 - self.row }]
    }

    fn bit(self) -> u8 {
        1 << (self.row * 2 + self.col)
    }
}

impl Default for Quadrant {
    fn default() -> Self {
        Self { col: 0, row: 0 }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.col, self.row)
    }
}

/// A subset of the four quadrants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Quadrant>", into = "Vec<Quadrant>")]
pub struct QuadrantSet(u8);

impl QuadrantSet {
    pub const EMPTY: Self = Self(0);
    pub const ALL: Self = Self(0b1111);

    pub fn contains(self, q: Quadrant) -> bool {
        self.0 & q.bit() != 0
    }

    pub fn insert(&mut self, q: Quadrant) {
        self.0 |= q.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Quadrant> {
        Quadrant::ALL.into_iter().filter(move |q| self.contains(*q))
    }
}

impl FromIterator<Quadrant> for QuadrantSet {
    fn from_iter<I: IntoIterator<Item = Quadrant>>(iter: I) -> Self {
        let mut s = Self::EMPTY;
        for q in iter {
            s.insert(q);
        }
        s
    }
}

impl From<Vec<Quadrant>> for QuadrantSet {
    fn from(v: Vec<Quadrant>) -> Self {
        v.into_iter().collect()
    }
}

impl From<QuadrantSet> for Vec<Quadrant> {
    fn from(s: QuadrantSet) -> Self {
        s.iter().collect()
    }
}

/// Where the robot may paint, and where it parks when it may not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZonePolicy {
    pub active: Quadrant,
    pub paint_allowed: QuadrantSet,
    pub park: Option<Quadrant>,
}

/// Quadrant containing `point`. Points on a midline belong to column/row 1.
pub fn quadrant_of(point: Point, spec: &CanvasSpec) -> Result<Quadrant, CanvasError> {
    if !spec.contains(point) {
        return Err(CanvasError::OutOfBounds(point.0, point.1));
    }
    Ok(Quadrant::new(
        u8::from(point.0 >= spec.width_mm / 2.0),
        u8::from(point.1 >= spec.height_mm / 2.0),
    ))
}

pub fn zone_policy(level: ArousalLevel, active: Quadrant) -> ZonePolicy {
    match level {
        ArousalLevel::Neutral => ZonePolicy { active, paint_allowed: QuadrantSet::ALL, park: None },
        ArousalLevel::NearThreshold => {
            ZonePolicy { active, paint_allowed: active.adjacent().into_iter().collect(), park: None }
        }
        ArousalLevel::Aroused => {
            ZonePolicy { active, paint_allowed: QuadrantSet::EMPTY, park: Some(active.diagonal()) }
        }
    }
}

/// Quadrant holding the plurality of artist points newer than `window_s`
/// before `now_ms`. Ties go to the quadrant of the most recent tied point;
/// with no recent points the previous quadrant stands.
pub fn active_workspace(
    artist_points: &[(u64, Point)],
    now_ms: u64,
    window_s: f64,
    spec: &CanvasSpec,
    prev: Quadrant,
) -> Quadrant {
    let cutoff = now_ms.saturating_sub((window_s * 1000.0).round() as u64);
    let mut counts = [0usize; 4];
    let mut latest: [Option<(u64, usize)>; 4] = [None; 4];
    for (idx, &(t, p)) in artist_points.iter().enumerate() {
        if t < cutoff || t > now_ms {
            continue;
        }
        let Ok(q) = quadrant_of(p, spec) else { continue };
        let slot = q.bit().trailing_zeros() as usize;
        counts[slot] += 1;
        latest[slot] = Some((t, idx));
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    if best == 0 {
        return prev;
    }
    Quadrant::ALL
        .into_iter()
        .filter(|q| counts[q.bit().trailing_zeros() as usize] == best)
        .max_by_key(|q| latest[q.bit().trailing_zeros() as usize])
        .unwrap_or(prev)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Author {
    Artist,
    Robot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub id: u64,
    pub author: Author,
    pub color: [u8; 3],
    pub width_mm: f64,
    pub path: Vec<Point>,
}

impl Stroke {
    pub fn validate(&self, spec: &CanvasSpec) -> Result<(), CanvasError> {
        if self.path.len() < 2 {
            return Err(CanvasError::BadStroke("path needs at least 2 points".into()));
        }
        if !(self.width_mm.is_finite() && self.width_mm > 0.0) {
            return Err(CanvasError::BadStroke("width must be positive".into()));
        }
        if let Some(&(x, y)) = self.path.iter().find(|p| !spec.contains(**p)) {
            return Err(CanvasError::OutOfBounds(x, y));
        }
        Ok(())
    }

    pub fn length_mm(&self) -> f64 {
        self.path.windows(2).map(|w| dist(w[0], w[1])).sum()
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    (b.0 - a.0).hypot(b.1 - a.1)
}
