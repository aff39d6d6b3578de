//! Baseline calibration, short-horizon heart-rate trend, and the
//! three-level arousal classifier with downward hysteresis.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ingest::{HeartRateEstimate, HR_MAX_BPM, HR_MIN_BPM};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArousalError {
    #[error("no estimates supplied")]
    EmptyInput,
    #[error("baseline is not calibrated")]
    NotCalibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArousalConfig {
    /// Threshold = mu + k * max(sigma, sigma_floor).
    pub k: f64,
    pub sigma_floor_bpm: f64,
    /// Width of the near-threshold band below the threshold.
    pub near_band_bpm: f64,
    /// Extra margin required before stepping down a level.
    pub hysteresis_bpm: f64,
    /// Estimates used by the trend fit.
    pub trend_points: usize,
    pub min_baseline_estimates: usize,
    pub calibration_s: f64,
}

impl Default for ArousalConfig {
    fn default() -> Self {
        Self {
            k: 1.5,
            sigma_floor_bpm: 2.0,
            near_band_bpm: 3.0,
            hysteresis_bpm: 2.0,
            trend_points: 8,
            min_baseline_estimates: 5,
            calibration_s: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub mu_bpm: f64,
    pub sigma_bpm: f64,
    pub n_samples: usize,
    pub calibrated: bool,
}

impl Baseline {
    pub fn threshold(&self, cfg: &ArousalConfig) -> f64 {
        self.mu_bpm + cfg.k * self.sigma_bpm.max(cfg.sigma_floor_bpm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArousalLevel {
    Neutral,
    NearThreshold,
    Aroused,
}

impl fmt::Display for ArousalLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArousalLevel::Neutral => "Neutral",
            ArousalLevel::NearThreshold => "NearThreshold",
            ArousalLevel::Aroused => "Aroused",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArousalState {
    pub level: ArousalLevel,
    pub predicted_bpm: f64,
    pub threshold_bpm: f64,
    pub near_band_bpm: f64,
    pub at: u64,
}

/// Mean and population standard deviation of the estimates' bpm.
pub fn calibrate_baseline(estimates: &[HeartRateEstimate], cfg: &ArousalConfig) -> Result<Baseline, ArousalError> {
    if estimates.is_empty() {
        return Err(ArousalError::EmptyInput);
    }
    let n = estimates.len() as f64;
    let mu = estimates.iter().map(|e| e.bpm).sum::<f64>() / n;
    let var = estimates.iter().map(|e| (e.bpm - mu).powi(2)).sum::<f64>() / n;
    Ok(Baseline {
        mu_bpm: mu,
        sigma_bpm: var.sqrt(),
        n_samples: estimates.len(),
        calibrated: estimates.len() >= cfg.min_baseline_estimates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trend {
    pub slope_bpm_per_s: f64,
    pub predicted_bpm: f64,
}

/// Ordinary least squares of bpm against time (seconds), evaluated at `now_ms`.
/// Callers pass the most recent M estimates.
pub fn fit_hr_trend(recent: &[HeartRateEstimate], now_ms: u64) -> Result<Trend, ArousalError> {
    let last = recent.last().ok_or(ArousalError::EmptyInput)?;
    let n = recent.len() as f64;
    // Centre time on the last point to keep the normal equations well scaled.
    let origin = last.timestamp_ms as f64 / 1000.0;
    let ts: Vec<f64> = recent.iter().map(|e| e.timestamp_ms as f64 / 1000.0 - origin).collect();
    let t_mean = ts.iter().sum::<f64>() / n;
    let y_mean = recent.iter().map(|e| e.bpm).sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - t_mean).powi(2)).sum();
    let (slope, predicted) = if recent.len() == 1 || sxx == 0.0 {
        (0.0, last.bpm)
    } else {
        let sxy: f64 = ts.iter().zip(recent).map(|(t, e)| (t - t_mean) * (e.bpm - y_mean)).sum();
        let slope = sxy / sxx;
        let now = now_ms as f64 / 1000.0 - origin;
        (slope, y_mean + slope * (now - t_mean))
    };
    Ok(Trend { slope_bpm_per_s: slope, predicted_bpm: predicted.clamp(HR_MIN_BPM, HR_MAX_BPM) })
}

fn raw_level(p: f64, theta: f64, band: f64) -> ArousalLevel {
    if p >= theta {
        ArousalLevel::Aroused
    } else if p >= theta - band {
        ArousalLevel::NearThreshold
    } else {
        ArousalLevel::Neutral
    }
}

/// Classifies a predicted heart rate against the baseline threshold.
///
/// Moves up a level immediately. Leaving Aroused needs `p < θ - h`; reaching
/// Neutral from above needs `p < θ - δ - h`. Otherwise the previous level holds.
pub fn classify_arousal(
    predicted_bpm: f64,
    baseline: &Baseline,
    prev: Option<ArousalLevel>,
    at: u64,
    cfg: &ArousalConfig,
) -> Result<ArousalState, ArousalError> {
    if !baseline.calibrated {
        return Err(ArousalError::NotCalibrated);
    }
    let theta = baseline.threshold(cfg);
    let band = cfg.near_band_bpm;
    let h = cfg.hysteresis_bpm;
    let p = predicted_bpm;
    let raw = raw_level(p, theta, band);

    let level = match prev {
        None => raw,
        Some(prev) if raw >= prev => raw,
        Some(ArousalLevel::Aroused) if p >= theta - h => ArousalLevel::Aroused,
        Some(_) if raw == ArousalLevel::Neutral && p >= theta - band - h => ArousalLevel::NearThreshold,
        Some(_) => raw,
    };
    Ok(ArousalState { level, predicted_bpm: p, threshold_bpm: theta, near_band_bpm: band, at })
}
