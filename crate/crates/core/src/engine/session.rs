use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::event::{EventPayload, Mode, RobotPosition, SessionEvent};
use super::snapshot::Snapshot;
use super::EngineError;
use crate::arousal::{calibrate_baseline, classify_arousal, fit_hr_trend, ArousalLevel, ArousalState, Baseline};
use crate::canvas::{active_workspace, dist, zone_policy, Author, Canvas, Point, Provenance, Quadrant, Stroke, ZonePolicy};
use crate::command::{Command, DirectCommand};
use crate::config::SessionConfig;
use crate::ingest::{HeartRateEstimate, HrTracker, IngestOutcome};
use crate::planner::{filter_by_zones, plan_from_prompt, reprioritize_for_position, stroke_allowed, PlannerError, Region, StrokePlan};

const RECENT_EVENTS: usize = 50;
const EPS: f64 = 1e-9;

/// One robot pixel write, stamped with the seq of the tick that made it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotWrite {
    pub seq: u64,
    pub pixel: usize,
}

/// A stroke being executed, with progress along its path.
#[derive(Debug, Clone, PartialEq)]
struct InFlight {
    stroke: Stroke,
    seg: usize,
    along: f64,
}

impl InFlight {
    fn new(stroke: Stroke) -> Self {
        Self { stroke, seg: 0, along: 0.0 }
    }

    fn point(&self) -> Point {
        let path = &self.stroke.path;
        if self.seg + 1 >= path.len() {
            return path[path.len() - 1];
        }
        let (a, b) = (path[self.seg], path[self.seg + 1]);
        let len = dist(a, b);
        if len < EPS {
            return a;
        }
        let t = self.along / len;
        (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
    }

    fn remaining(&self) -> f64 {
        let path = &self.stroke.path;
        if self.seg + 1 >= path.len() {
            return 0.0;
        }
        let rest: f64 = path[self.seg + 1..].windows(2).map(|w| dist(w[0], w[1])).sum();
        dist(path[self.seg], path[self.seg + 1]) - self.along + rest
    }

    fn done(&self) -> bool {
        self.seg + 1 >= self.stroke.path.len()
    }

    /// Moves `distance` mm along the path; returns the traced sub-path.
    fn advance(&mut self, mut distance: f64) -> Vec<Point> {
        let mut pts = vec![self.point()];
        let path = &self.stroke.path;
        while self.seg + 1 < path.len() {
            let left = dist(path[self.seg], path[self.seg + 1]) - self.along;
            if distance + EPS >= left {
                distance = (distance - left).max(0.0);
                self.seg += 1;
                self.along = 0.0;
                pts.push(path[self.seg]);
            } else {
                self.along += distance;
                pts.push(self.point());
                break;
            }
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Robot {
    pos: Point,
    outside: bool,
    paint_remaining_mm: f64,
    current: Option<InFlight>,
    refill_ticks_left: u32,
}

/// The full session state. Mutated only through [`Session::apply`].
#[derive(Debug, Clone)]
pub struct Session {
    cfg: SessionConfig,
    last_seq: u64,
    last_at_ms: u64,
    mode: Mode,
    canvas: Canvas,
    tracker: HrTracker,
    estimates: VecDeque<HeartRateEstimate>,
    last_estimate: Option<HeartRateEstimate>,
    calibration: Vec<HeartRateEstimate>,
    calibration_start_ms: Option<u64>,
    baseline: Option<Baseline>,
    arousal: Option<ArousalState>,
    /// Level driving the zone policy; follows arousal but can be forced by
    /// "move away" / "come back".
    policy_level: ArousalLevel,
    active: Quadrant,
    artist_points: Vec<(u64, Point)>,
    policy: ZonePolicy,
    plan: StrokePlan,
    queued_prompts: Vec<String>,
    plans_started: u64,
    palette_index: usize,
    next_stroke_id: u64,
    robot: Robot,
    robot_writes: Vec<RobotWrite>,
    robot_pixel_writes: u64,
    zone_violations: u64,
    recent: VecDeque<SessionEvent>,
}

impl Session {
    pub fn new(cfg: SessionConfig) -> Result<Self, EngineError> {
        cfg.validate().map_err(|e| EngineError::InvalidInput(e.to_string()))?;
        let canvas = Canvas::new(cfg.canvas).map_err(|e| EngineError::InvalidInput(e.to_string()))?;
        let tracker = HrTracker::new(cfg.estimator.clone(), cfg.ppg_sample_rate_hz, cfg.estimate_interval_ms);
        let active = Quadrant::default();
        let home = cfg.robot.home_mm;
        let capacity = cfg.robot.paint_capacity_mm;
        Ok(Self {
            last_seq: 0,
            last_at_ms: 0,
            mode: Mode::Idle,
            canvas,
            tracker,
            estimates: VecDeque::new(),
            last_estimate: None,
            calibration: Vec::new(),
            calibration_start_ms: None,
            baseline: None,
            arousal: None,
            policy_level: ArousalLevel::Neutral,
            active,
            artist_points: Vec::new(),
            policy: zone_policy(ArousalLevel::Neutral, active),
            plan: StrokePlan::empty(),
            queued_prompts: Vec::new(),
            plans_started: 0,
            palette_index: 0,
            next_stroke_id: 1,
            robot: Robot { pos: home, outside: false, paint_remaining_mm: capacity, current: None, refill_ticks_left: 0 },
            robot_writes: Vec::new(),
            robot_pixel_writes: 0,
            zone_violations: 0,
            recent: VecDeque::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn last_at_ms(&self) -> u64 {
        self.last_at_ms
    }

    pub fn canvas(&self) -> &Canvas {
        &self.canvas
    }

    pub fn policy(&self) -> &ZonePolicy {
        &self.policy
    }

    pub fn plan(&self) -> &StrokePlan {
        &self.plan
    }

    pub fn baseline(&self) -> Option<&Baseline> {
        self.baseline.as_ref()
    }

    pub fn robot_pos(&self) -> (Point, bool) {
        (self.robot.pos, self.robot.outside)
    }

    pub fn paint_remaining_mm(&self) -> f64 {
        self.robot.paint_remaining_mm
    }

    pub fn palette_index(&self) -> usize {
        self.palette_index
    }

    /// Robot pixel writes, when `record_writes` is on.
    pub fn robot_writes(&self) -> &[RobotWrite] {
        &self.robot_writes
    }

    pub fn robot_pixel_writes(&self) -> u64 {
        self.robot_pixel_writes
    }

    /// Robot writes that landed outside the policy in force. Always zero
    /// unless the planner's containment check is broken.
    pub fn zone_violations(&self) -> u64 {
        self.zone_violations
    }

    /// Id of the stroke currently being executed, if any.
    pub fn current_stroke(&self) -> Option<&Stroke> {
        self.robot.current.as_ref().map(|c| &c.stroke)
    }

    /// The id the next accepted stroke (artist or planned) will receive.
    pub fn next_stroke_id(&self) -> u64 {
        self.next_stroke_id
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            last_seq: self.last_seq,
            at_ms: self.last_at_ms,
            mode: self.mode,
            robot_pos: self.robot.pos,
            robot_outside: self.robot.outside,
            last_hr: self.last_estimate,
            arousal: self.arousal,
            threshold_bpm: self.baseline.map(|b| b.threshold(&self.cfg.arousal)),
            baseline: self.baseline,
            active_quadrant: self.active,
            paint_allowed: self.policy.paint_allowed,
            park: self.policy.park,
            pending_count: self.plan.pending.len(),
            deferred_count: self.plan.deferred.len(),
            palette_index: self.palette_index,
            paint_remaining_mm: self.robot.paint_remaining_mm,
            canvas_digest: self.canvas.digest_hex(),
            robot_pixel_writes: self.robot_pixel_writes,
            dropped_samples: self.tracker.dropped(),
            recent_events: self.recent.iter().cloned().collect(),
        }
    }

    /// Applies one event. `event.seq` must follow the last applied seq and
    /// `at_ms` must not go backwards. Returns the payloads this event causes,
    /// which the caller commits next with consecutive seqs.
    pub fn apply(&mut self, event: &SessionEvent) -> Result<Vec<EventPayload>, EngineError> {
        if event.seq != self.last_seq + 1 {
            return Err(EngineError::SeqGap { expected: self.last_seq + 1, got: event.seq });
        }
        if event.at_ms < self.last_at_ms {
            return Err(EngineError::TimeRegression { last: self.last_at_ms, got: event.at_ms });
        }
        if let EventPayload::ArtistStroke(s) = &event.payload {
            s.validate(&self.cfg.canvas).map_err(|e| EngineError::InvalidInput(e.to_string()))?;
            if s.author != Author::Artist || s.id != self.next_stroke_id {
                return Err(EngineError::InvalidInput("artist stroke id/author not assigned by engine".into()));
            }
        }
        self.last_seq = event.seq;
        self.last_at_ms = event.at_ms;

        let mut out = Vec::new();
        let at = event.at_ms;
        match &event.payload {
            EventPayload::SampleIn(sample) => self.on_sample(*sample, &mut out),
            EventPayload::HrUpdated(est) => self.on_estimate(*est, &mut out),
            EventPayload::ArousalChanged(state) => self.on_arousal(*state, &mut out),
            EventPayload::CommandIssued(cmd) => self.on_command(cmd, &mut out),
            EventPayload::ArtistStroke(stroke) => self.on_artist_stroke(stroke, at, &mut out),
            EventPayload::RobotMoved(pos) => self.on_robot_moved(*pos, &mut out),
            EventPayload::Tick => self.on_tick(event.seq, &mut out),
            EventPayload::StateChanged { .. }
            | EventPayload::PromptRejected { .. }
            | EventPayload::PaintRefilled
            | EventPayload::PolicyChanged(_)
            | EventPayload::PlanStarted { .. } => {}
        }

        self.recent.push_back(event.clone());
        while self.recent.len() > RECENT_EVENTS {
            self.recent.pop_front();
        }
        Ok(out)
    }

    fn set_mode(&mut self, to: Mode, out: &mut Vec<EventPayload>) {
        if self.mode != to {
            out.push(EventPayload::StateChanged { from: self.mode, to });
            self.mode = to;
        }
    }

    /// Mode to settle in once the robot may act again.
    fn working_mode(&self) -> Mode {
        if self.baseline.is_none() {
            if self.calibration_start_ms.is_some() {
                Mode::Calibrating
            } else {
                Mode::Idle
            }
        } else if self.policy_level == ArousalLevel::Aroused {
            Mode::Withdrawn
        } else {
            Mode::Painting
        }
    }

    fn abort_stroke(&mut self) {
        if let Some(c) = self.robot.current.take() {
            log::debug!("aborting stroke {} at {:?}", c.stroke.id, c.point());
        }
    }

    /// Recomputes the zone policy and re-filters the plan. A stroke in flight
    /// that the new policy forbids is aborted where it stands.
    fn refresh_policy(&mut self, out: &mut Vec<EventPayload>) {
        let policy = zone_policy(self.policy_level, self.active);
        if policy == self.policy {
            return;
        }
        self.policy = policy;
        out.push(EventPayload::PolicyChanged(policy));
        let plan = std::mem::replace(&mut self.plan, StrokePlan::empty());
        self.plan = filter_by_zones(plan, &self.policy, &self.cfg.canvas);
        let forbidden = self
            .robot
            .current
            .as_ref()
            .is_some_and(|c| !stroke_allowed(&c.stroke, self.policy.paint_allowed, &self.cfg.canvas));
        if forbidden {
            self.abort_stroke();
        }
    }

    fn on_sample(&mut self, sample: crate::ingest::BiometricSample, out: &mut Vec<EventPayload>) {
        if self.mode == Mode::Idle {
            self.calibration_start_ms = Some(sample.timestamp_ms);
            self.set_mode(Mode::Calibrating, out);
        } else if self.calibration_start_ms.is_none() {
            self.calibration_start_ms = Some(sample.timestamp_ms);
        }
        match self.tracker.push(sample) {
            IngestOutcome::Estimate(est) => out.push(EventPayload::HrUpdated(est)),
            IngestOutcome::Rejected(e) => log::debug!("estimate rejected at {}: {e}", sample.timestamp_ms),
            IngestOutcome::Dropped | IngestOutcome::Buffered => {}
        }
    }

    fn on_estimate(&mut self, est: HeartRateEstimate, out: &mut Vec<EventPayload>) {
        let acfg = self.cfg.arousal.clone();
        self.last_estimate = Some(est);
        self.estimates.push_back(est);
        while self.estimates.len() > acfg.trend_points {
            self.estimates.pop_front();
        }

        if self.baseline.is_none() {
            self.calibration.push(est);
            let start = self.calibration_start_ms.unwrap_or(est.timestamp_ms);
            let elapsed = est.timestamp_ms >= start + (acfg.calibration_s * 1000.0).round() as u64;
            if !elapsed {
                return;
            }
            match calibrate_baseline(&self.calibration, &acfg) {
                Ok(b) if b.calibrated => {
                    log::info!("baseline calibrated: {:.1} ± {:.2} bpm over {} estimates", b.mu_bpm, b.sigma_bpm, b.n_samples);
                    self.baseline = Some(b);
                    if self.mode == Mode::Calibrating {
                        self.set_mode(Mode::Painting, out);
                    }
                    for prompt in std::mem::take(&mut self.queued_prompts) {
                        self.start_plan(&prompt, out);
                    }
                }
                _ => return,
            }
        }

        let Some(baseline) = self.baseline else { return };
        let recent: Vec<_> = self.estimates.iter().copied().collect();
        let Ok(trend) = fit_hr_trend(&recent, est.timestamp_ms) else { return };
        let prev = self.arousal.map(|a| a.level);
        if let Ok(state) = classify_arousal(trend.predicted_bpm, &baseline, prev, est.timestamp_ms, &acfg) {
            if prev != Some(state.level) {
                out.push(EventPayload::ArousalChanged(state));
            } else {
                self.arousal = Some(state);
            }
        }
    }

    fn on_arousal(&mut self, state: ArousalState, out: &mut Vec<EventPayload>) {
        self.arousal = Some(state);
        self.policy_level = state.level;
        self.refresh_policy(out);
        match (self.mode, state.level) {
            (Mode::Painting, ArousalLevel::Aroused) => {
                self.abort_stroke();
                self.set_mode(Mode::Withdrawn, out);
            }
            (Mode::Withdrawn, ArousalLevel::Neutral | ArousalLevel::NearThreshold) => {
                self.set_mode(Mode::Painting, out);
            }
            _ => {}
        }
    }

    fn on_command(&mut self, cmd: &Command, out: &mut Vec<EventPayload>) {
        match cmd {
            Command::PaintPrompt(text) => {
                if self.baseline.is_some() {
                    self.start_plan(text, out);
                } else if plan_from_prompt(text, Region::Whole, &self.cfg.palette, 0, 0, &self.cfg.canvas, 0, 1.0).is_err() {
                    out.push(EventPayload::PromptRejected { text: text.clone() });
                } else {
                    self.queued_prompts.push(text.clone());
                }
            }
            Command::Direct(d) => self.on_direct(*d, out),
        }
    }

    fn on_direct(&mut self, cmd: DirectCommand, out: &mut Vec<EventPayload>) {
        match cmd {
            DirectCommand::Stop => {
                self.abort_stroke();
                self.set_mode(Mode::Stopped, out);
            }
            DirectCommand::Pause => {
                if self.mode == Mode::Painting {
                    self.set_mode(Mode::Paused, out);
                }
            }
            DirectCommand::Resume => match self.mode {
                Mode::Paused => {
                    let to = self.working_mode();
                    self.set_mode(to, out);
                }
                Mode::Stopped if !self.robot.outside => {
                    let to = self.working_mode();
                    self.set_mode(to, out);
                }
                _ => {}
            },
            DirectCommand::ChangeColors => {
                self.palette_index = (self.palette_index + 1) % self.cfg.palette.len();
            }
            DirectCommand::MoveAway => {
                self.policy_level = ArousalLevel::Aroused;
                self.refresh_policy(out);
                if self.mode == Mode::Painting {
                    self.abort_stroke();
                    self.set_mode(Mode::Withdrawn, out);
                }
            }
            DirectCommand::ComeBack => {
                self.policy_level = ArousalLevel::Neutral;
                self.refresh_policy(out);
                if self.mode == Mode::Withdrawn {
                    self.set_mode(Mode::Painting, out);
                }
            }
        }
    }

    fn start_plan(&mut self, prompt: &str, out: &mut Vec<EventPayload>) {
        let seed = self.cfg.seed.wrapping_add(self.plans_started);
        match plan_from_prompt(
            prompt,
            Region::Whole,
            &self.cfg.palette,
            self.palette_index,
            seed,
            &self.cfg.canvas,
            self.next_stroke_id,
            self.cfg.robot.stroke_width_mm,
        ) {
            Ok(plan) => {
                let discarded = self.plan.len() + usize::from(self.robot.current.is_some());
                self.abort_stroke();
                self.plans_started += 1;
                self.next_stroke_id += plan.len() as u64;
                let strokes = plan.len();
                self.plan = filter_by_zones(plan, &self.policy, &self.cfg.canvas);
                out.push(EventPayload::PlanStarted { prompt: prompt.to_string(), strokes, discarded });
            }
            Err(PlannerError::UnknownPattern(_) | PlannerError::EmptyPrompt) => {
                out.push(EventPayload::PromptRejected { text: prompt.to_string() });
            }
            Err(e) => log::warn!("planner failed for {prompt:?}: {e}"),
        }
    }

    fn on_artist_stroke(&mut self, stroke: &Stroke, at: u64, out: &mut Vec<EventPayload>) {
        self.next_stroke_id += 1;
        self.canvas.paint_path(&stroke.path, stroke.color, stroke.width_mm, Provenance {
            author: Author::Artist,
            stroke_id: stroke.id,
        });
        self.artist_points.extend(stroke.path.iter().map(|p| (at, *p)));
        let window_ms = (self.cfg.workspace_window_s * 1000.0).round() as u64;
        let cutoff = at.saturating_sub(window_ms);
        self.artist_points.retain(|(t, _)| *t >= cutoff);
        let active = active_workspace(&self.artist_points, at, self.cfg.workspace_window_s, &self.cfg.canvas, self.active);
        if active != self.active {
            self.active = active;
            self.refresh_policy(out);
        }
    }

    fn on_robot_moved(&mut self, pos: RobotPosition, out: &mut Vec<EventPayload>) {
        match pos.resolve(&self.cfg.canvas) {
            None => {
                if let RobotPosition::At { x_mm, y_mm } = pos {
                    self.robot.pos = (x_mm, y_mm);
                }
                self.robot.outside = true;
                self.abort_stroke();
                self.set_mode(Mode::Stopped, out);
            }
            Some(p) => {
                self.robot.pos = p;
                self.robot.outside = false;
                let plan = std::mem::replace(&mut self.plan, StrokePlan::empty());
                self.plan = reprioritize_for_position(plan.clone(), p, &self.cfg.canvas).unwrap_or(plan);
                if matches!(self.mode, Mode::Painting | Mode::Paused | Mode::Withdrawn) {
                    self.abort_stroke();
                    self.set_mode(Mode::Painting, out);
                }
            }
        }
    }

    fn move_toward(&mut self, target: Point, budget_s: f64) -> f64 {
        let d = dist(self.robot.pos, target);
        let reach = self.cfg.robot.travel_speed_mm_s * budget_s;
        if d <= reach {
            self.robot.pos = target;
            budget_s - d / self.cfg.robot.travel_speed_mm_s
        } else {
            let t = reach / d;
            self.robot.pos = (self.robot.pos.0 + (target.0 - self.robot.pos.0) * t, self.robot.pos.1 + (target.1 - self.robot.pos.1) * t);
            0.0
        }
    }

    fn on_tick(&mut self, seq: u64, out: &mut Vec<EventPayload>) {
        let dt = self.cfg.tick_ms as f64 / 1000.0;
        match self.mode {
            Mode::Painting => self.paint_for(dt, seq, out),
            Mode::Withdrawn => {
                let park = self.policy.park.unwrap_or(self.active.diagonal());
                let target = self.cfg.canvas.quadrant_center(park);
                self.move_toward(target, dt);
            }
            Mode::Refill => {
                self.move_toward(self.cfg.robot.paint_station_mm, dt);
                self.robot.refill_ticks_left = self.robot.refill_ticks_left.saturating_sub(1);
                if self.robot.refill_ticks_left == 0 {
                    self.robot.paint_remaining_mm = self.cfg.robot.paint_capacity_mm;
                    out.push(EventPayload::PaintRefilled);
                    let to = self.working_mode();
                    self.set_mode(to, out);
                }
            }
            Mode::Idle | Mode::Calibrating | Mode::Paused | Mode::Stopped => {}
        }
    }

    fn paint_for(&mut self, mut budget_s: f64, seq: u64, out: &mut Vec<EventPayload>) {
        let paint_speed = self.cfg.robot.paint_speed_mm_s;
        while budget_s > EPS {
            if self.robot.current.is_none() {
                if self.plan.pending.is_empty() {
                    return;
                }
                let next = self.plan.pending.remove(0);
                self.robot.current = Some(InFlight::new(next));
            }
            let start = self.robot.current.as_ref().map(InFlight::point).expect("stroke in flight");
            if dist(self.robot.pos, start) > EPS {
                budget_s = self.move_toward(start, budget_s);
                continue;
            }
            let current = self.robot.current.as_mut().expect("stroke in flight");
            let step = (paint_speed * budget_s).min(current.remaining());
            if self.robot.paint_remaining_mm + EPS < step {
                self.robot.refill_ticks_left = self.cfg.robot.refill_ticks.max(1);
                self.set_mode(Mode::Refill, out);
                return;
            }
            let traced = current.advance(step);
            let done = current.done();
            let prov = Provenance { author: Author::Robot, stroke_id: current.stroke.id };
            let (color, width) = (current.stroke.color, current.stroke.width_mm);
            self.robot.pos = *traced.last().expect("non-empty trace");
            self.robot.paint_remaining_mm = (self.robot.paint_remaining_mm - step).max(0.0);
            budget_s -= step / paint_speed;
            let written = self.canvas.paint_path(&traced, color, width, prov);
            self.audit_writes(seq, &written);
            if done {
                self.robot.current = None;
            }
        }
    }

    fn audit_writes(&mut self, seq: u64, written: &[usize]) {
        let (w, _) = self.canvas.dims();
        self.robot_pixel_writes += written.len() as u64;
        for &i in written {
            let q = self.cfg.canvas.pixel_quadrant(i % w, i / w);
            if !self.policy.paint_allowed.contains(q) {
                self.zone_violations += 1;
            }
        }
        if self.cfg.record_writes {
            self.robot_writes.extend(written.iter().map(|&pixel| RobotWrite { seq, pixel }));
        }
    }
}

#[cfg(test)]
impl Session {
    /// Puts `stroke` in flight with the robot already at its start.
    pub(crate) fn force_in_flight(&mut self, stroke: Stroke) {
        self.robot.pos = stroke.path[0];
        self.robot.current = Some(InFlight::new(stroke));
    }

    pub(crate) fn force_paint_remaining(&mut self, mm: f64) {
        self.robot.paint_remaining_mm = mm;
    }

    pub(crate) fn force_robot_pos(&mut self, p: Point) {
        self.robot.pos = p;
    }
}
