//! Parametric pattern library.
//!
//! Each pattern is a fixed family of polylines in unit coordinates
//! `(u, v) ∈ [-1, 1]²`, mapped onto the target rectangle with a uniform scale
//! of 0.85 × half the shorter side about the rectangle centre. The seed only
//! rotates or slightly rescales the family; the stroke count never changes.
//!
//! | keyword | strokes | family                                              |
//! |---------|---------|-----------------------------------------------------|
//! | circle  | 3       | concentric circles r = 1, 2/3, 1/3; 37 points each   |
//! | grid    | 8       | 4 horizontal + 4 vertical lines at ±1/4, ±3/4        |
//! | star    | 5       | pentagram edges, tip i to tip i+2                    |
//! | flower  | 7       | 6 elliptical petals (17 points) + 1 curved stem      |
//! | vase    | 4       | left and right profile, elliptical rim, base line    |

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canvas::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Circle,
    Grid,
    Star,
    Flower,
    Vase,
}

pub const PATTERNS: [Pattern; 5] = [Pattern::Circle, Pattern::Grid, Pattern::Star, Pattern::Flower, Pattern::Vase];

impl Pattern {
    pub fn keyword(self) -> &'static str {
        match self {
            Pattern::Circle => "circle",
            Pattern::Grid => "grid",
            Pattern::Star => "star",
            Pattern::Flower => "flower",
            Pattern::Vase => "vase",
        }
    }

    pub fn stroke_count(self) -> usize {
        match self {
            Pattern::Circle => 3,
            Pattern::Grid => 8,
            Pattern::Star => 5,
            Pattern::Flower => 7,
            Pattern::Vase => 4,
        }
    }

    /// Polylines for this pattern inside `rect = (x0, y0, x1, y1)`.
    pub fn paths(self, rect: (f64, f64, f64, f64), seed: u64) -> Vec<Vec<Point>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ keyword_salt(self.keyword()));
        let rotation = rng.random_range(0.0..TAU);
        let squash = rng.random_range(0.9..1.0);
        let unit = match self {
            Pattern::Circle => circle(rotation),
            Pattern::Grid => grid(squash),
            Pattern::Star => star(rotation),
            Pattern::Flower => flower(rotation),
            Pattern::Vase => vase(squash),
        };
        debug_assert_eq!(unit.len(), self.stroke_count());
        let (x0, y0, x1, y1) = rect;
        let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        let scale = 0.85 * 0.5 * (x1 - x0).min(y1 - y0);
        unit.into_iter()
            .map(|path| path.into_iter().map(|(u, v)| (cx + scale * u, cy + scale * v)).collect())
            .collect()
    }
}

fn keyword_salt(k: &str) -> u64 {
    let mut h = crate::digest::Fnv1a64::new();
    h.update(k.as_bytes());
    h.finish()
}

fn ellipse(center: Point, a: f64, b: f64, tilt: f64, points: usize) -> Vec<Point> {
    let (s, c) = tilt.sin_cos();
    (0..points)
        .map(|i| {
            let t = TAU * i as f64 / (points - 1) as f64;
            let (x, y) = (a * t.cos(), b * t.sin());
            (center.0 + x * c - y * s, center.1 + x * s + y * c)
        })
        .collect()
}

fn circle(rotation: f64) -> Vec<Vec<Point>> {
    [1.0, 2.0 / 3.0, 1.0 / 3.0].iter().map(|&r| ellipse((0.0, 0.0), r, r, rotation, 37)).collect()
}

fn grid(squash: f64) -> Vec<Vec<Point>> {
    let ticks = [-0.75, -0.25, 0.25, 0.75];
    let horizontal = ticks.iter().map(|&v| vec![(-squash, v * squash), (squash, v * squash)]);
    let vertical = ticks.iter().map(|&u| vec![(u * squash, -squash), (u * squash, squash)]);
    horizontal.chain(vertical).collect()
}

fn star(rotation: f64) -> Vec<Vec<Point>> {
    let tip = |i: usize| {
        let a = rotation - PI / 2.0 + TAU * i as f64 / 5.0;
        (a.cos(), a.sin())
    };
    (0..5).map(|i| vec![tip(i), tip((i + 2) % 5)]).collect()
}

fn flower(rotation: f64) -> Vec<Vec<Point>> {
    let head = (0.0, -0.4);
    let mut out: Vec<Vec<Point>> = (0..6)
        .map(|i| {
            let a = rotation + TAU * i as f64 / 6.0;
            let c = (head.0 + 0.3 * a.cos(), head.1 + 0.3 * a.sin());
            ellipse(c, 0.25, 0.12, a, 17)
        })
        .collect();
    let stem = (0..9)
        .map(|i| {
            let t = i as f64 / 8.0;
            (0.12 * (PI * t).sin(), -0.1 + 1.05 * t)
        })
        .collect();
    out.push(stem);
    out
}

fn vase(squash: f64) -> Vec<Vec<Point>> {
    // Body half-width as a function of height v in [-0.8, 0.9].
    let profile = |side: f64| -> Vec<Point> {
        (0..13)
            .map(|i| {
                let v = -0.8 + 1.7 * i as f64 / 12.0;
                let w = 0.3 + 0.35 * (PI * (v + 0.8) / 1.7).sin() - 0.1 * ((v + 0.8) / 1.7);
                (side * w * squash, v)
            })
            .collect()
    };
    let top_w = 0.3 * squash;
    let bottom = profile(1.0)[12].0;
    vec![
        profile(-1.0),
        profile(1.0),
        ellipse((0.0, -0.8), top_w, 0.08, 0.0, 17),
        vec![(-bottom, 0.9), (bottom, 0.9)],
    ]
}
