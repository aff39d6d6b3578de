//! Scripted sessions at simulated time.
//!
//! A scenario is a JSON file of timed inputs. Inputs with `t_ms` at or
//! before a tick boundary are enqueued before that tick, so a scenario runs
//! identically with or without wall-clock pacing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::canvas::{Author, CanvasSpec, Quadrant};
use crate::command::parse_command;
use crate::config::{ConfigError, SessionConfig};
use crate::engine::{Engine, EngineError, EventPayload, Mode, SessionEvent, SessionLog};
use crate::ingest::{hr_in_range, BiometricSample, BpmProfile, PpgGenerator};
use crate::wire::{CommandBody, MoveBody, StrokeBody};

const FIG1_LOOP: &str = include_str!("../scenarios/fig1_loop.json");

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("engine error: {0}")]
    Engine(#[from] EngineError),
}

impl RunError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) => 2,
            RunError::Engine(_) => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpgSpec {
    /// Constant rate; ignored when `profile` is given.
    #[serde(default)]
    pub bpm: Option<f64>,
    /// Piecewise-constant `(offset_s, bpm)` steps relative to the event time.
    #[serde(default)]
    pub profile: Option<Vec<(f64, f64)>>,
    pub duration_s: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PpgSpec {
    fn bpm_profile(&self) -> Result<BpmProfile, ScenarioError> {
        let p = match (&self.profile, self.bpm) {
            (Some(steps), _) => BpmProfile(steps.clone()),
            (None, Some(b)) => BpmProfile::constant(b),
            (None, None) => return Err(ScenarioError::Invalid("ppg_profile needs bpm or profile".into())),
        };
        p.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum ScenarioInput {
    PpgProfile(PpgSpec),
    Hr { bpm: f64 },
    Command(CommandBody),
    ArtistStroke(StrokeBody),
    RobotMove(MoveBody),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub t_ms: u64,
    #[serde(flatten)]
    pub input: ScenarioInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Overrides merged into the base config.
    #[serde(default)]
    pub config: serde_json::Value,
    /// Simulated run length; defaults to the last input.
    #[serde(default)]
    pub duration_s: Option<f64>,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

/// A scenario compiled to engine inputs, sorted by time.
#[derive(Debug, Clone)]
pub struct CompiledScenario {
    pub config: SessionConfig,
    pub inputs: Vec<(u64, EventPayload)>,
    pub end_ms: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn bundled(name: &str) -> Option<Self> {
        match name {
            "fig1_loop" => Some(Self::from_json(FIG1_LOOP).expect("bundled scenario parses")),
            _ => None,
        }
    }

    pub fn bundled_names() -> &'static [&'static str] {
        &["fig1_loop"]
    }

    /// Validates against `base` with this scenario's overrides applied and
    /// expands everything into engine inputs.
    pub fn compile(&self, base: &SessionConfig) -> Result<CompiledScenario, ScenarioError> {
        let overrides = if self.config.is_null() { serde_json::json!({}) } else { self.config.clone() };
        let config = base.with_overrides(&overrides)?;
        let mut inputs = Vec::new();
        let mut last_t = 0;
        let mut end_ms = 0;
        let mut ppg = PpgGenerator::new(config.ppg_sample_rate_hz).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        for (i, ev) in self.events.iter().enumerate() {
            let bad = |msg: String| ScenarioError::Invalid(format!("event {i} at t_ms={}: {msg}", ev.t_ms));
            if ev.t_ms < last_t {
                return Err(bad(format!("t_ms goes backwards (previous {last_t})")));
            }
            last_t = ev.t_ms;
            end_ms = end_ms.max(ev.t_ms);
            match &ev.input {
                ScenarioInput::PpgProfile(spec) => {
                    let profile = spec.bpm_profile().map_err(|e| bad(e.to_string()))?;
                    if !(spec.duration_s.is_finite() && spec.duration_s >= 0.0 && spec.noise_std.is_finite() && spec.noise_std >= 0.0) {
                        return Err(bad("duration_s and noise_std must be finite and non-negative".into()));
                    }
                    let samples = ppg
                        .generate(ev.t_ms, &profile, spec.duration_s, spec.noise_std, spec.seed)
                        .map_err(|e| bad(e.to_string()))?;
                    if let Some(last) = samples.last() {
                        end_ms = end_ms.max(last.timestamp_ms);
                    }
                    inputs.extend(samples.into_iter().map(|s| (s.timestamp_ms, EventPayload::SampleIn(s))));
                }
                ScenarioInput::Hr { bpm } => {
                    if !hr_in_range(*bpm) {
                        return Err(bad(format!("heart rate {bpm} out of range")));
                    }
                    inputs.push((ev.t_ms, EventPayload::SampleIn(BiometricSample::hr(ev.t_ms, *bpm))));
                }
                ScenarioInput::Command(body) => {
                    let cmd = parse_command(&body.text).map_err(|e| bad(e.to_string()))?;
                    inputs.push((ev.t_ms, EventPayload::CommandIssued(cmd)));
                }
                ScenarioInput::ArtistStroke(body) => {
                    let stroke = body.clone().into_stroke().map_err(|e| bad(e.to_string()))?;
                    stroke.validate(&config.canvas).map_err(|e| bad(e.to_string()))?;
                    inputs.push((ev.t_ms, EventPayload::ArtistStroke(stroke)));
                }
                ScenarioInput::RobotMove(body) => {
                    let pos = body.clone().into_position().map_err(|e| bad(e.to_string()))?;
                    inputs.push((ev.t_ms, EventPayload::RobotMoved(pos)));
                }
            }
        }
        // Stable, so same-time inputs keep file order.
        inputs.sort_by_key(|(t, _)| *t);
        if let Some(d) = self.duration_s {
            if !(d.is_finite() && d >= 0.0) {
                return Err(ScenarioError::Invalid(format!("bad duration_s {d}")));
            }
            end_ms = (d * 1000.0).round() as u64;
        }
        let tick = config.tick_ms;
        end_ms = end_ms.div_ceil(tick) * tick;
        Ok(CompiledScenario { config, inputs, end_ms })
    }

    /// Runs in simulated time. With `fast` off, each tick also waits one
    /// tick of wall-clock time; the result is identical either way.
    pub fn run(&self, base: &SessionConfig, fast: bool) -> Result<ScenarioRun, RunError> {
        let compiled = self.compile(base)?;
        let config = compiled.config.clone();
        let mut engine = Engine::new(config.clone())?;
        let mut events = Vec::new();
        let mut next = 0;
        let tick = config.tick_ms;
        let mut now = 0;
        loop {
            while next < compiled.inputs.len() && compiled.inputs[next].0 <= now {
                let (at, payload) = compiled.inputs[next].clone();
                engine.enqueue(payload, at)?;
                next += 1;
            }
            events.extend(engine.step(now)?);
            if now >= compiled.end_ms {
                break;
            }
            now += tick;
            if !fast {
                std::thread::sleep(Duration::from_millis(tick));
            }
        }
        let report = ScenarioReport::new(&self.name, &engine, &events);
        let mut log = SessionLog::new(&config);
        log.events = events;
        Ok(ScenarioRun { engine, log, report })
    }

    /// A random but reproducible session: a heart-rate profile that may
    /// spike, prompts, artist strokes, repositioning and direct commands.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = CanvasSpec::default();
        let duration_s: u64 = rng.random_range(60..=120);
        let mut events = Vec::new();

        let base: f64 = rng.random_range(60.0..80.0);
        let mut profile = vec![(0.0, base)];
        let mut t = 35.0;
        while t < duration_s as f64 {
            profile.push((t, (base + rng.random_range(-8.0..30.0)).clamp(45.0, 170.0)));
            t += rng.random_range(4.0..15.0);
        }
        if rng.random_bool(0.5) {
            let noise_std = if rng.random_bool(0.5) { 0.0 } else { 0.05 };
            events.push(ScenarioEvent {
                t_ms: 0,
                input: ScenarioInput::PpgProfile(PpgSpec {
                    bpm: None,
                    profile: Some(profile),
                    duration_s: duration_s as f64,
                    noise_std,
                    seed: rng.random(),
                }),
            });
        } else {
            let p = BpmProfile(profile);
            for s in 0..duration_s {
                let bpm = p.bpm_at(s as f64) + rng.random_range(-1.0..1.0);
                events.push(ScenarioEvent { t_ms: s * 1000, input: ScenarioInput::Hr { bpm } });
            }
        }

        let words = ["draw a flower", "paint a circle", "a star please", "make a grid", "draw a vase", "draw a dragon"];
        let directs = ["pause", "resume", "change colors", "move away", "come back", "stop", "resume"];
        let n_actions = rng.random_range(6..20);
        for _ in 0..n_actions {
            let t_ms = rng.random_range(0..duration_s * 1000);
            let input = match rng.random_range(0..10) {
                0..=2 => ScenarioInput::Command(CommandBody { text: words[rng.random_range(0..words.len())].to_string() }),
                3..=5 => {
                    let q = Quadrant::ALL[rng.random_range(0..4)];
                    let (cx, cy) = spec.quadrant_center(q);
                    let n = rng.random_range(2..8);
                    let path = (0..n)
                        .map(|_| (cx + rng.random_range(-60.0..60.0), cy + rng.random_range(-45.0..45.0)))
                        .map(|(x, y)| (x.clamp(0.0, spec.width_mm), y.clamp(0.0, spec.height_mm)))
                        .collect();
                    ScenarioInput::ArtistStroke(StrokeBody { color: [rng.random(), rng.random(), rng.random()], width_mm: rng.random_range(1.0..4.0), path })
                }
                6..=7 => ScenarioInput::Command(CommandBody { text: directs[rng.random_range(0..directs.len())].to_string() }),
                _ => {
                    if rng.random_bool(0.2) {
                        ScenarioInput::RobotMove(MoveBody::Outside { outside: true })
                    } else {
                        ScenarioInput::RobotMove(MoveBody::At { x_mm: rng.random_range(0.0..spec.width_mm), y_mm: rng.random_range(0.0..spec.height_mm) })
                    }
                }
            };
            events.push(ScenarioEvent { t_ms, input });
        }
        // Early in the session a prompt is always given so most runs paint.
        events.push(ScenarioEvent { t_ms: rng.random_range(0..35_000), input: ScenarioInput::Command(CommandBody { text: "draw a grid".into() }) });
        events.sort_by_key(|e| e.t_ms);
        Scenario { name: format!("random-{seed}"), config: serde_json::json!({ "seed": seed }), duration_s: Some(duration_s as f64), events }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub seq: u64,
    pub at_ms: u64,
    pub from: Mode,
    pub to: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantPixels {
    pub quadrant: Quadrant,
    pub pixels: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub final_mode: Mode,
    pub digest: String,
    pub last_seq: u64,
    pub end_ms: u64,
    pub transitions: Vec<Transition>,
    /// Robot-authored pixels left on the canvas, per quadrant.
    pub robot_pixels: Vec<QuadrantPixels>,
    pub robot_pixel_writes: u64,
    pub zone_violations: u64,
    pub event_counts: BTreeMap<String, u64>,
}

impl ScenarioReport {
    pub fn new(name: &str, engine: &Engine, events: &[SessionEvent]) -> Self {
        let s = engine.session();
        let spec = s.config().canvas;
        let mut per_q = [0u64; 4];
        for (x, y) in s.canvas().authored_pixels(Author::Robot) {
            let q = spec.pixel_quadrant(x, y);
            per_q[usize::from(q.row) * 2 + usize::from(q.col)] += 1;
        }
        let mut event_counts = BTreeMap::new();
        for e in events {
            *event_counts.entry(e.payload.kind().to_string()).or_insert(0) += 1;
        }
        Self {
            name: name.to_string(),
            final_mode: s.mode(),
            digest: s.canvas().digest_hex(),
            last_seq: s.last_seq(),
            end_ms: s.last_at_ms(),
            transitions: transitions(events),
            robot_pixels: Quadrant::ALL.iter().map(|&q| QuadrantPixels { quadrant: q, pixels: per_q[usize::from(q.row) * 2 + usize::from(q.col)] }).collect(),
            robot_pixel_writes: s.robot_pixel_writes(),
            zone_violations: s.zone_violations(),
            event_counts,
        }
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario      {}", self.name);
        let _ = writeln!(out, "final mode    {}", self.final_mode);
        let _ = writeln!(out, "digest        {}", self.digest);
        let _ = writeln!(out, "events        {} (last seq)", self.last_seq);
        let _ = writeln!(out, "sim time      {:.1} s", self.end_ms as f64 / 1000.0);
        let _ = writeln!(out, "robot writes  {} (violations {})", self.robot_pixel_writes, self.zone_violations);
        let _ = writeln!(out, "robot pixels by quadrant (col,row):");
        for q in &self.robot_pixels {
            let _ = writeln!(out, "  ({},{})  {:>8}", q.quadrant.col, q.quadrant.row, q.pixels);
        }
        let _ = writeln!(out, "transitions:");
        for t in &self.transitions {
            let _ = writeln!(out, "  {:>8.1} s  seq {:>7}  {} -> {}", t.at_ms as f64 / 1000.0, t.seq, t.from, t.to);
        }
        out
    }
}

pub fn transitions(events: &[SessionEvent]) -> Vec<Transition> {
    events
        .iter()
        .filter_map(|e| match e.payload {
            EventPayload::StateChanged { from, to } => Some(Transition { seq: e.seq, at_ms: e.at_ms, from, to }),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub engine: Engine,
    pub log: SessionLog,
    pub report: ScenarioReport,
}

impl ScenarioRun {
    /// Writes `session.jsonl`, `canvas.ppm` and `summary.json` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("session.jsonl"), self.log.to_bytes())?;
        std::fs::write(dir.join("canvas.ppm"), self.engine.session().canvas().export_ppm())?;
        let summary = serde_json::to_vec_pretty(&self.report).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("summary.json"), summary)
    }
}
