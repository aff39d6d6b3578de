//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the report reads top to bottom.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aura_core::arousal::{classify_arousal, ArousalConfig, ArousalLevel, Baseline};
use aura_core::canvas::{quadrant_of, zone_policy, Author, CanvasSpec, Quadrant, QuadrantSet, ZonePolicy};
use aura_core::command::{Command as Cmd, DirectCommand};
use aura_core::engine::{Engine, EventPayload, Mode, RobotPosition, SessionEvent, SessionLog};
use aura_core::ingest::{estimate_heart_rate, synth_ppg, BiometricSample, BpmProfile, EstimatorConfig};
use aura_core::scenario::Scenario;
use aura_core::SessionConfig;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn recording() -> SessionConfig {
    SessionConfig { record_writes: true, ..SessionConfig::default() }
}

/// Drives an engine in 100 ms ticks with one HR reading per second.
struct Sim {
    engine: Engine,
    t: u64,
    log: Vec<SessionEvent>,
}

impl Sim {
    fn new(cfg: SessionConfig, bpm: f64) -> Self {
        let mut engine = Engine::new(cfg).unwrap();
        engine.enqueue(EventPayload::SampleIn(BiometricSample::hr(0, bpm)), 0).unwrap();
        let log = engine.step(0).unwrap();
        Self { engine, t: 0, log }
    }

    fn run_to(&mut self, end_ms: u64, bpm: f64) {
        while self.t < end_ms {
            self.t += 100;
            if self.t % 1000 == 0 {
                self.engine.enqueue(EventPayload::SampleIn(BiometricSample::hr(self.t, bpm)), self.t).unwrap();
            }
            self.log.extend(self.engine.step(self.t).unwrap());
        }
    }

    /// Steps until the robot has painted something and is mid-stroke.
    fn run_until_painting(&mut self, bpm: f64) -> Result<(), String> {
        for _ in 0..50 {
            let s = self.engine.session();
            if s.robot_pixel_writes() > 0 && s.current_stroke().is_some() {
                return Ok(());
            }
            self.run_to(self.t + 100, bpm);
        }
        Err("robot never got going".into())
    }

    /// Enqueues an input for the next tick and returns that tick's events.
    fn input(&mut self, payload: EventPayload) -> Vec<SessionEvent> {
        self.engine.enqueue(payload, self.t).unwrap();
        self.t += 100;
        let evs = self.engine.step(self.t).unwrap();
        self.log.extend(evs.clone());
        evs
    }

    fn seq_of(evs: &[SessionEvent], pred: impl Fn(&EventPayload) -> bool) -> Option<u64> {
        evs.iter().find(|e| pred(&e.payload)).map(|e| e.seq)
    }
}

/// Re-folds a log one input cascade at a time, calling `visit` with the
/// last seq of each cascade and the engine state after it.
fn fold_cascades(events: &[SessionEvent], cfg: &SessionConfig, mut visit: impl FnMut(u64, &Engine)) -> Result<(), String> {
    let mut engine = Engine::new(cfg.clone()).map_err(|e| e.to_string())?;
    let mut i = 0;
    while i < events.len() {
        let e = &events[i];
        let produced = engine.commit(e.payload.clone(), e.at_ms).map_err(|e| e.to_string())?;
        if produced.as_slice() != &events[i..i + produced.len()] {
            return Err(format!("log diverges at seq {}", e.seq));
        }
        i += produced.len();
        visit(produced.last().unwrap().seq, &engine);
    }
    Ok(())
}

fn robot_pixels(engine: &Engine) -> HashSet<(usize, usize)> {
    engine.session().canvas().authored_pixels(Author::Robot).collect()
}

// 1 ------------------------------------------------------------------------

fn hr_accuracy() -> Outcome {
    let t0 = Instant::now();
    let cfg = EstimatorConfig::default();
    let mut worst_clean: f64 = 0.0;
    let mut worst_noisy: f64 = 0.0;
    for bpm in [50.0, 72.0, 100.0, 150.0] {
        let clean = synth_ppg(&BpmProfile::constant(bpm), 25.0, 0.0, 1, 10.0).map_err(|e| e.to_string())?;
        let est = estimate_heart_rate(&clean, 25.0, &cfg).map_err(|e| format!("{bpm} bpm clean: {e}"))?;
        let err = (est.bpm - bpm).abs();
        ensure(err <= 2.0, || format!("{bpm} bpm clean: estimate {:.2}", est.bpm))?;
        worst_clean = worst_clean.max(err);
        for seed in 1..=10 {
            let noisy = synth_ppg(&BpmProfile::constant(bpm), 25.0, 0.1, seed, 10.0).map_err(|e| e.to_string())?;
            let est = estimate_heart_rate(&noisy, 25.0, &cfg).map_err(|e| format!("{bpm} bpm noisy seed {seed}: {e}"))?;
            let err = (est.bpm - bpm).abs();
            ensure(err <= 5.0, || format!("{bpm} bpm noise 0.1 seed {seed}: estimate {:.2}", est.bpm))?;
            worst_noisy = worst_noisy.max(err);
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    ensure(elapsed < 1.0, || format!("took {elapsed:.3} s"))?;
    Ok(format!("max error clean {worst_clean:.2} bpm, noise 0.1 (10 seeds) {worst_noisy:.2} bpm, {elapsed:.3} s"))
}

// 2 ------------------------------------------------------------------------

fn fig1_loop() -> Outcome {
    // Through the CLI, as an operator would run it.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_aura"))
        .args(["scenario", "fig1_loop", "--fast", "--json", "--out"])
        .arg(dir.path())
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("cli exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let log_file = std::fs::File::open(dir.path().join("session.jsonl")).map_err(|e| e.to_string())?;
    let log = SessionLog::read_from(std::io::BufReader::new(log_file)).map_err(|e| e.to_string())?;
    let events = &log.events;

    let transitions: Vec<(u64, u64, Mode, Mode)> = events
        .iter()
        .filter_map(|e| match e.payload {
            EventPayload::StateChanged { from, to } => Some((e.seq, e.at_ms, from, to)),
            _ => None,
        })
        .collect();
    ensure(summary["transitions"].as_array().map(Vec::len) == Some(transitions.len()), || "summary disagrees with log".into())?;
    let chain = [(Mode::Idle, Mode::Calibrating), (Mode::Calibrating, Mode::Painting), (Mode::Painting, Mode::Withdrawn), (Mode::Withdrawn, Mode::Painting)];
    let mut found = Vec::new();
    let mut from_idx = 0;
    for want in chain {
        let pos = transitions[from_idx..].iter().position(|t| (t.2, t.3) == want).ok_or_else(|| {
            format!("missing {:?} after index {from_idx}; transitions {:?}", want, transitions.iter().map(|t| (t.2, t.3)).collect::<Vec<_>>())
        })?;
        found.push(transitions[from_idx + pos]);
        from_idx += pos + 1;
    }
    let (w_seq, w_at, ..) = found[2];
    let (p_seq, p_at, ..) = found[3];

    let aroused_at = events
        .iter()
        .find_map(|e| match &e.payload {
            EventPayload::ArousalChanged(a) if a.level == ArousalLevel::Aroused => Some(e.at_ms),
            _ => None,
        })
        .ok_or("never classified Aroused")?;
    let latency = w_at as i64 - aroused_at as i64;
    ensure((0..=2000).contains(&latency), || format!("Withdrawn {latency} ms after first Aroused"))?;

    // Independent fold: no robot pixel appears between the two transitions.
    // The cascade holding P starts at the last input at or before it.
    let p_cascade = events.iter().filter(|e| e.seq <= p_seq && e.payload.is_input()).map(|e| e.seq).max().unwrap();
    let cfg = log.header.config.clone();
    let mut at_w = None;
    let mut before_p = None;
    fold_cascades(events, &cfg, |last, engine| {
        if last >= w_seq && at_w.is_none() {
            at_w = Some(robot_pixels(engine));
        }
        if last + 1 == p_cascade {
            before_p = Some(robot_pixels(engine));
        }
    })?;
    let (at_w, before_p) = (at_w.unwrap(), before_p.ok_or("no cascade boundary before Painting")?);
    let new_pixels = before_p.difference(&at_w).count();
    ensure(new_pixels == 0, || format!("{new_pixels} robot pixels written while Withdrawn"))?;

    // And the engine's own per-write record agrees.
    let live = Scenario::bundled("fig1_loop").unwrap().run(&recording(), true).map_err(|e| e.to_string())?;
    let during = live.engine.session().robot_writes().iter().filter(|w| w.seq > w_seq && w.seq < p_seq).count();
    ensure(during == 0, || format!("{during} recorded robot writes while Withdrawn"))?;
    ensure(live.engine.session().robot_pixel_writes() > 0, || "robot never painted".into())?;

    Ok(format!(
        "Calibrating->Painting->Withdrawn({:.1} s)->Painting({:.1} s); withdraw latency {latency} ms; 0 robot pixels while withdrawn",
        w_at as f64 / 1000.0,
        p_at as f64 / 1000.0
    ))
}

// 3 ------------------------------------------------------------------------

fn zone_safety() -> Outcome {
    let mut writes = 0u64;
    let mut violations = 0u64;
    let mut painted_runs = 0;
    let base = recording();
    for seed in 0..100u64 {
        let run = Scenario::random(seed).run(&base, true).map_err(|e| format!("seed {seed}: {e}"))?;
        let session = run.engine.session();
        let spec = session.config().canvas;
        let (w, _) = session.canvas().dims();
        // Policy in force at each seq, rebuilt from the log alone.
        let mut timeline: Vec<(u64, ZonePolicy)> = vec![(0, zone_policy(ArousalLevel::Neutral, Quadrant::default()))];
        for e in &run.log.events {
            if let EventPayload::PolicyChanged(p) = e.payload {
                timeline.push((e.seq, p));
            }
        }
        let policy_at = |seq: u64| timeline.iter().rev().find(|(s, _)| *s < seq).unwrap().1;
        for wr in session.robot_writes() {
            let (px, py) = (wr.pixel % w, wr.pixel / w);
            let centre = ((px as f64 + 0.5) / spec.px_per_mm, (py as f64 + 0.5) / spec.px_per_mm);
            let q = Quadrant::new(u8::from(centre.0 >= spec.width_mm / 2.0), u8::from(centre.1 >= spec.height_mm / 2.0));
            if !policy_at(wr.seq).paint_allowed.contains(q) {
                violations += 1;
            }
        }
        writes += session.robot_writes().len() as u64;
        ensure(session.zone_violations() == 0, || format!("seed {seed}: engine audit counted {}", session.zone_violations()))?;
        if !session.robot_writes().is_empty() {
            painted_runs += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} robot pixels outside the allowed quadrants"))?;
    ensure(painted_runs >= 50, || format!("only {painted_runs}/100 scenarios painted anything"))?;
    Ok(format!("{writes} robot pixel writes over 100 scenarios ({painted_runs} painted), 0 violations"))
}

// 4 ------------------------------------------------------------------------

fn command_precedence() -> Outcome {
    // Calibrate at 70, then settle to Neutral so the whole plan is open.
    let mut sim = Sim::new(recording(), 70.0);
    sim.run_to(30_000, 70.0);
    sim.run_to(32_000, 62.0);
    ensure(sim.engine.session().mode() == Mode::Painting, || format!("not painting after calibration: {:?}", sim.engine.session().mode()))?;
    sim.input(EventPayload::CommandIssued(Cmd::PaintPrompt("draw a flower".into())));
    sim.run_until_painting(62.0)?;
    sim.run_to(sim.t + 300, 62.0);
    let before = sim.engine.session().robot_pixel_writes();
    let left = sim.engine.session().plan().len() + usize::from(sim.engine.session().current_stroke().is_some());
    ensure(before > 0 && left > 1, || format!("not mid-execution at Stop (writes {before}, strokes left {left})"))?;
    let evs = sim.input(EventPayload::CommandIssued(Cmd::Direct(DirectCommand::Stop)));
    let stop_seq = Sim::seq_of(&evs, |p| matches!(p, EventPayload::CommandIssued(_))).unwrap();
    sim.run_to(60_000, 62.0);
    let after: Vec<_> = sim.engine.session().robot_writes().iter().filter(|w| w.seq > stop_seq).collect();
    ensure(after.is_empty(), || format!("{} robot pixels after Stop", after.len()))?;
    ensure(sim.engine.session().mode() == Mode::Stopped, || format!("final mode {:?}", sim.engine.session().mode()))?;

    // Fold the log independently: the robot-authored pixel set is fixed from the Stop on.
    let mut at_stop = None;
    let mut grew = false;
    fold_cascades(&sim.log, sim.engine.session().config(), |last, engine| {
        if last >= stop_seq {
            let now = robot_pixels(engine);
            match &at_stop {
                None => at_stop = Some(now),
                Some(s) => grew |= !now.is_subset(s),
            }
        }
    })?;
    ensure(!grew, || "robot pixel set grew after Stop".into())?;
    Ok(format!("{before} robot pixels before Stop (seq {stop_seq}) with {left} strokes left, 0 after; final Stopped"))
}

// 5 ------------------------------------------------------------------------

fn repositioning() -> Outcome {
    // Dragged off the canvas mid-stroke.
    let mut sim = Sim::new(recording(), 70.0);
    sim.run_to(31_000, 70.0);
    sim.input(EventPayload::CommandIssued(Cmd::PaintPrompt("draw a flower".into())));
    sim.run_until_painting(70.0)?;
    ensure(sim.engine.session().robot_pixel_writes() > 0, || "robot idle before the drag".into())?;
    sim.input(EventPayload::RobotMoved(RobotPosition::Outside));
    ensure(sim.engine.session().mode() == Mode::Stopped, || format!("after drag-out: {:?}", sim.engine.session().mode()))?;
    let frozen = sim.engine.session().robot_pixel_writes();
    let digest = sim.engine.session().canvas().digest();
    sim.run_to(40_000, 70.0);
    sim.input(EventPayload::CommandIssued(Cmd::Direct(DirectCommand::Resume)));
    sim.run_to(50_000, 70.0);
    ensure(sim.engine.session().mode() == Mode::Stopped, || "resumed while outside".into())?;
    ensure(sim.engine.session().robot_pixel_writes() == frozen, || "robot pixel count moved while outside".into())?;
    ensure(sim.engine.session().canvas().digest() == digest, || "canvas changed while outside".into())?;

    // Placed back on the canvas in quadrant q.
    let mut sim = Sim::new(recording(), 70.0);
    sim.run_to(30_000, 70.0);
    sim.run_to(33_000, 62.0);
    let level = sim.engine.session().snapshot().arousal.map(|a| a.level);
    ensure(level == Some(ArousalLevel::Neutral), || format!("expected Neutral, got {level:?}"))?;
    sim.input(EventPayload::CommandIssued(Cmd::PaintPrompt("draw a star".into())));
    sim.run_to(34_000, 62.0);
    let spec = sim.engine.session().config().canvas;
    let pending = &sim.engine.session().plan().pending;
    let head_q = pending.first().map(|s| quadrant_of(s.path[0], &spec).unwrap());
    let q = pending
        .iter()
        .rev()
        .map(|s| quadrant_of(s.path[0], &spec).unwrap())
        .find(|q| Some(*q) != head_q)
        .ok_or("no pending stroke starts outside the head stroke's quadrant")?;
    let (x_mm, y_mm) = spec.quadrant_center(q);
    let evs = sim.input(EventPayload::RobotMoved(RobotPosition::At { x_mm, y_mm }));
    let moved_seq = Sim::seq_of(&evs, |p| matches!(p, EventPayload::RobotMoved(_))).unwrap();
    let next = sim.engine.session().current_stroke().cloned().ok_or("no stroke started after the move")?;
    let first_q = quadrant_of(next.path[0], &spec).unwrap();
    ensure(first_q == q, || format!("next stroke {} starts in {:?}, expected {:?}", next.id, first_q, q))?;
    sim.run_to(36_000, 62.0);
    let painted = sim.engine.session().robot_writes().iter().filter(|w| w.seq > moved_seq).count();
    ensure(painted > 0, || "nothing painted after the move".into())?;
    Ok(format!(
        "drag-out: Stopped, {frozen} robot pixels frozen through Resume; in-bounds move to ({},{}): next stroke {} starts there",
        q.col, q.row, next.id
    ))
}

// 6 ------------------------------------------------------------------------

fn no_chatter() -> Outcome {
    let cfg = ArousalConfig::default();
    let baseline = Baseline { mu_bpm: 70.0, sigma_bpm: 3.0, n_samples: 30, calibrated: true };
    let theta = baseline.threshold(&cfg);
    let mut prev = classify_arousal(baseline.mu_bpm, &baseline, None, 0, &cfg).map_err(|e| e.to_string())?.level;
    let (mut into, mut out_of) = (0, 0);
    for i in 0..20 {
        let p = if i % 2 == 0 { theta + 0.5 } else { theta - 0.5 };
        let level = classify_arousal(p, &baseline, Some(prev), i, &cfg).map_err(|e| e.to_string())?.level;
        if level == ArousalLevel::Aroused && prev != ArousalLevel::Aroused {
            into += 1;
        }
        if prev == ArousalLevel::Aroused && level != ArousalLevel::Aroused {
            out_of += 1;
        }
        prev = level;
    }
    ensure(into == 1 && out_of == 0, || format!("{into} into Aroused, {out_of} out"))?;
    Ok(format!("theta {theta:.2}: 1 transition into Aroused, 0 out over 20 classifications"))
}

// 7 ------------------------------------------------------------------------

fn replay_determinism() -> Outcome {
    let mut ok = 0;
    for seed in 1000..1020u64 {
        let run = Scenario::random(seed).run(&SessionConfig::default(), true).map_err(|e| e.to_string())?;
        let live = run.engine.session().canvas().digest();
        let bytes = run.log.to_bytes();
        let log = SessionLog::read_from(bytes.as_slice()).map_err(|e| format!("seed {seed}: {e}"))?;
        let replayed = log.replay(None).map_err(|e| format!("seed {seed}: {e}"))?;
        if replayed.session().canvas().digest() == live && replayed.session().snapshot() == run.engine.session().snapshot() {
            ok += 1;
        }
    }
    ensure(ok == 20, || format!("{ok}/20 replays matched"))?;
    Ok("20/20 replay digests match live".into())
}

// 8 ------------------------------------------------------------------------

fn quadrant_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    for _ in 0..5 {
        let spec = CanvasSpec {
            width_mm: rng.random_range(10.0..1000.0),
            height_mm: rng.random_range(10.0..1000.0),
            px_per_mm: rng.random_range(0.5..4.0),
        };
        for i in 0..=100 {
            for j in 0..=100 {
                let p = (spec.width_mm * i as f64 / 100.0, spec.height_mm * j as f64 / 100.0);
                let want = Quadrant::new(u8::from(2.0 * p.0 >= spec.width_mm), u8::from(2.0 * p.1 >= spec.height_mm));
                let got = quadrant_of(p, &spec).map_err(|e| e.to_string())?;
                ensure(got == want, || format!("{p:?} on {spec:?}: {got:?} != {want:?}"))?;
                checked += 1;
            }
        }
    }
    for q in Quadrant::ALL {
        let d = q.diagonal();
        ensure(d.col != q.col && d.row != q.row && d.diagonal() == q, || format!("diagonal of {q:?}"))?;
        let adj = q.adjacent();
        for a in adj {
            let differs = u8::from(a.col != q.col) + u8::from(a.row != q.row);
            ensure(differs == 1, || format!("{a:?} not adjacent to {q:?}"))?;
        }
        let mut all = QuadrantSet::EMPTY;
        for x in [q, d, adj[0], adj[1]] {
            all.insert(x);
        }
        ensure(all == QuadrantSet::ALL, || format!("{q:?}: self, diagonal and adjacent do not cover the canvas"))?;
        for a in adj {
            ensure(a.diagonal() != q && adj.iter().all(|b| b.diagonal() != a || *b == a.diagonal()), || "adjacency not symmetric".into())?;
            ensure(a.adjacent().contains(&q), || "adjacency not symmetric".into())?;
        }
    }
    Ok(format!("{checked} grid points across 5 canvases match; diagonal/adjacent hold for all 4 quadrants"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("HR estimation accuracy", hr_accuracy),
        ("closed loop (fig1_loop)", fig1_loop),
        ("zone safety audit", zone_safety),
        ("command precedence", command_precedence),
        ("physical repositioning", repositioning),
        ("hysteresis / no chatter", no_chatter),
        ("replay determinism", replay_determinism),
        ("quadrant oracle", quadrant_oracle),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail} [{secs:.2} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
