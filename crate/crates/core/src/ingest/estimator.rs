use serde::{Deserialize, Serialize};

use super::{hr_in_range, BiometricSample, IngestError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Minimum span of the analysis window.
    pub window_s: f64,
    /// Width of the centered moving average subtracted as baseline.
    pub detrend_s: f64,
    /// Width of the centered moving average applied before peak picking;
    /// 0 disables it. Keeps noise ripples on one crest from reading as two
    /// beats; 0.15 s is five samples at 25 Hz.
    pub smooth_s: f64,
    /// Minimum spacing between accepted peaks. 0.33 s caps detection near 180 bpm.
    pub refractory_s: f64,
    /// Peaks must exceed this fraction of the detrended percentile below.
    pub threshold_fraction: f64,
    pub threshold_percentile: f64,
    pub min_peaks: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            window_s: 10.0,
            detrend_s: 1.0,
            smooth_s: 0.15,
            refractory_s: 0.33,
            threshold_fraction: 0.5,
            threshold_percentile: 0.9,
            min_peaks: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeartRateEstimate {
    pub timestamp_ms: u64,
    pub bpm: f64,
    pub confidence: f64,
    pub n_peaks: usize,
    pub window_s: f64,
}

impl HeartRateEstimate {
    /// Wraps a device-computed heart rate, which skips peak detection.
    pub fn from_device(timestamp_ms: u64, bpm: f64) -> Self {
        Self { timestamp_ms, bpm, confidence: 0.9, n_peaks: 0, window_s: 0.0 }
    }
}

struct Peak {
    t_s: f64,
    height: f64,
}

/// Estimates heart rate from a window of PPG samples.
///
/// The window is detrended with a centered moving average and lightly
/// smoothed, then local maxima above
/// a fraction of the detrended 90th percentile are taken as beats (subject to a
/// refractory interval), and the rate is the mean beat frequency between the
/// first and last accepted peak. Peak times are refined by fitting a parabola
/// through each maximum and its neighbours.
pub fn estimate_heart_rate(
    window: &[BiometricSample],
    sample_rate_hz: f64,
    params: &EstimatorConfig,
) -> Result<HeartRateEstimate, IngestError> {
    if !(sample_rate_hz >= 10.0) || !sample_rate_hz.is_finite() {
        return Err(IngestError::BadSampleRate(sample_rate_hz));
    }
    let mut samples = window.to_vec();
    samples.sort_by_key(|s| s.timestamp_ms);

    let span_s = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => (b.timestamp_ms - a.timestamp_ms) as f64 / 1000.0 + 1.0 / sample_rate_hz,
        _ => 0.0,
    };
    if span_s + 1e-9 < params.window_s {
        return Err(IngestError::WindowTooShort { span_s, needed_s: params.window_s });
    }

    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let mut detrended = detrend(&values, (sample_rate_hz * params.detrend_s / 2.0).round() as usize);
    let smooth_half = (sample_rate_hz * params.smooth_s / 2.0).round() as usize;
    if smooth_half > 0 {
        let ripple = detrend(&detrended, smooth_half);
        detrended.iter_mut().zip(ripple).for_each(|(v, r)| *v -= r);
    }
    let threshold = params.threshold_fraction * percentile(&detrended, params.threshold_percentile);

    let insufficient = |found| IngestError::InsufficientData { found, needed: params.min_peaks };
    if !(threshold > 0.0) {
        return Err(insufficient(0));
    }

    let mut peaks: Vec<Peak> = Vec::new();
    for i in 1..detrended.len().saturating_sub(1) {
        let (l, c, r) = (detrended[i - 1], detrended[i], detrended[i + 1]);
        if !(c > l && c >= r && c > threshold) {
            continue;
        }
        let t_s = samples[i].timestamp_ms as f64 / 1000.0 + parabolic_offset(l, c, r) * half_step_s(&samples, i) * 2.0;
        let candidate = Peak { t_s, height: c };
        match peaks.last_mut() {
            Some(last) if candidate.t_s - last.t_s < params.refractory_s => {
                if candidate.height > last.height {
                    *last = candidate;
                }
            }
            _ => peaks.push(candidate),
        }
    }

    let n = peaks.len();
    if n < params.min_peaks.max(2) {
        return Err(insufficient(n));
    }
    let first = peaks[0].t_s;
    let last = peaks[n - 1].t_s;
    let bpm = 60.0 * (n - 1) as f64 / (last - first);
    if !hr_in_range(bpm) {
        return Err(IngestError::RangeError(bpm));
    }

    let intervals: Vec<f64> = peaks.windows(2).map(|w| w[1].t_s - w[0].t_s).collect();
    let mean = intervals.iter().sum::<f64>() / intervals.len() as f64;
    let var = intervals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / intervals.len() as f64;
    let cv = var.sqrt() / mean;
    let confidence = (n as f64 / 10.0).min(1.0) * (1.0 - cv).max(0.0);
    if !(confidence > 0.0) {
        return Err(IngestError::LowConfidence);
    }

    Ok(HeartRateEstimate {
        timestamp_ms: samples[samples.len() - 1].timestamp_ms,
        bpm,
        confidence,
        n_peaks: n,
        window_s: span_s,
    })
}

/// Subtracts a centered moving average of `half` samples each side.
/// The average is truncated at the window edges.
fn detrend(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            values[i] - (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Linear-interpolated percentile, `q` in [0, 1].
fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Vertex of the parabola through three equally spaced points, in samples
/// relative to the middle one.
fn parabolic_offset(l: f64, c: f64, r: f64) -> f64 {
    let denom = l - 2.0 * c + r;
    if denom.abs() < f64::EPSILON * c.abs().max(1.0) {
        return 0.0;
    }
    (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
}

fn half_step_s(samples: &[BiometricSample], i: usize) -> f64 {
    (samples[i + 1].timestamp_ms - samples[i - 1].timestamp_ms) as f64 / 4000.0
}
