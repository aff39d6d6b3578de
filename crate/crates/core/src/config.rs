//! Session configuration.
//!
//! Every tunable in the engine lives here with its default. A config file is
//! JSON; any field may be omitted and falls back to the default below.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arousal::ArousalConfig;
use crate::canvas::CanvasSpec;
use crate::digest::Fnv1a64;
use crate::ingest::EstimatorConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    /// Pen-down speed in mm/s.
    pub paint_speed_mm_s: f64,
    /// Pen-up travel speed in mm/s.
    pub travel_speed_mm_s: f64,
    /// Paint load in mm of pen-down travel.
    pub paint_capacity_mm: f64,
    pub refill_ticks: u32,
    pub paint_station_mm: (f64, f64),
    pub home_mm: (f64, f64),
    pub stroke_width_mm: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            paint_speed_mm_s: 50.0,
            travel_speed_mm_s: 100.0,
            paint_capacity_mm: 400.0,
            refill_ticks: 20,
            paint_station_mm: (0.0, 0.0),
            home_mm: (140.0, 108.0),
            stroke_width_mm: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub canvas: CanvasSpec,
    pub estimator: EstimatorConfig,
    pub arousal: ArousalConfig,
    pub robot: RobotConfig,
    /// Nominal PPG sample rate of the sensor stream.
    pub ppg_sample_rate_hz: f64,
    /// Spacing between successive heart-rate estimates, in sensor time.
    pub estimate_interval_ms: u64,
    /// Simulated time advanced by one tick.
    pub tick_ms: u64,
    /// Window over which artist strokes vote for the active workspace.
    pub workspace_window_s: f64,
    /// RGB palette cycled by "change colors".
    pub palette: Vec<[u8; 3]>,
    /// Seed handed to the stroke planner.
    pub seed: u64,
    /// Record every robot pixel write with its tick seq (used by audits).
    pub record_writes: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            canvas: CanvasSpec::default(),
            estimator: EstimatorConfig::default(),
            arousal: ArousalConfig::default(),
            robot: RobotConfig::default(),
            ppg_sample_rate_hz: 25.0,
            estimate_interval_ms: 1000,
            tick_ms: 100,
            workspace_window_s: 30.0,
            palette: vec![[200, 40, 40], [40, 90, 200], [230, 190, 30], [40, 150, 70]],
            seed: 0,
            record_writes: false,
        }
    }
}

impl SessionConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: SessionConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a JSON object of overrides on top of `self`, field by field.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Self, ConfigError> {
        let mut base = serde_json::to_value(self)?;
        merge_json(&mut base, overrides);
        let cfg: SessionConfig = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if let Err(e) = self.canvas.validate() {
            return Err(ConfigError::Invalid(e.to_string()));
        }
        if self.palette.is_empty() {
            return invalid("palette must not be empty");
        }
        if self.ppg_sample_rate_hz < 10.0 || !self.ppg_sample_rate_hz.is_finite() {
            return invalid("ppg_sample_rate_hz must be >= 10");
        }
        if self.tick_ms == 0 || self.estimate_interval_ms == 0 {
            return invalid("tick_ms and estimate_interval_ms must be positive");
        }
        let r = &self.robot;
        if !(r.paint_speed_mm_s > 0.0 && r.travel_speed_mm_s > 0.0 && r.paint_capacity_mm > 0.0) {
            return invalid("robot speeds and paint capacity must be positive");
        }
        if !(r.stroke_width_mm > 0.0) {
            return invalid("robot stroke width must be positive");
        }
        if self.arousal.min_baseline_estimates == 0 || self.arousal.trend_points == 0 {
            return invalid("min_baseline_estimates and trend_points must be >= 1");
        }
        Ok(())
    }

    /// Stable hash of the canonical JSON form, embedded in session log headers.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Fnv1a64::new();
        h.update(json.as_bytes());
        format!("{:016x}", h.finish())
    }
}

fn merge_json(base: &mut serde_json::Value, over: &serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}
