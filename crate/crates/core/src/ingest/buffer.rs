use std::collections::VecDeque;

use super::{estimate_heart_rate, BiometricSample, EstimatorConfig, HeartRateEstimate, IngestError, Tag};

#[derive(Debug, Clone, PartialEq)]
pub enum IngestOutcome {
    /// Late or duplicate for its tag stream; discarded.
    Dropped,
    Buffered,
    Estimate(HeartRateEstimate),
    /// An estimate was due but the window did not yield one.
    Rejected(IngestError),
}

/// Buffers PPG samples for one session and produces an estimate every
/// `interval_ms` of sensor time once a full window is available.
#[derive(Debug, Clone)]
pub struct HrTracker {
    cfg: EstimatorConfig,
    fs: f64,
    interval_ms: u64,
    window: VecDeque<BiometricSample>,
    last_pg: Option<u64>,
    last_hr: Option<u64>,
    next_estimate_at: u64,
    dropped: u64,
}

impl HrTracker {
    pub fn new(cfg: EstimatorConfig, fs: f64, interval_ms: u64) -> Self {
        Self {
            cfg,
            fs,
            interval_ms,
            window: VecDeque::new(),
            last_pg: None,
            last_hr: None,
            next_estimate_at: 0,
            dropped: 0,
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn push(&mut self, sample: BiometricSample) -> IngestOutcome {
        let last = match sample.tag {
            Tag::PG => &mut self.last_pg,
            Tag::HR => &mut self.last_hr,
        };
        if last.is_some_and(|prev| sample.timestamp_ms <= prev) {
            self.dropped += 1;
            return IngestOutcome::Dropped;
        }
        *last = Some(sample.timestamp_ms);

        if sample.tag == Tag::HR {
            return IngestOutcome::Estimate(HeartRateEstimate::from_device(sample.timestamp_ms, sample.value));
        }

        let window_ms = (self.cfg.window_s * 1000.0).round() as u64;
        let period_ms = (1000.0 / self.fs).round() as u64;
        self.window.push_back(sample);
        let keep_from = sample.timestamp_ms.saturating_sub(window_ms + 1000);
        while self.window.front().is_some_and(|s| s.timestamp_ms < keep_from) {
            self.window.pop_front();
        }

        let now = sample.timestamp_ms;
        let first = self.window.front().map_or(now, |s| s.timestamp_ms);
        if now < self.next_estimate_at || now + period_ms < first + window_ms {
            return IngestOutcome::Buffered;
        }
        self.next_estimate_at = now + self.interval_ms;
        let start = (now + period_ms).saturating_sub(window_ms);
        let slice: Vec<BiometricSample> =
            self.window.iter().filter(|s| s.timestamp_ms >= start).copied().collect();
        match estimate_heart_rate(&slice, self.fs, &self.cfg) {
            Ok(est) => IngestOutcome::Estimate(est),
            Err(e) => IngestOutcome::Rejected(e),
        }
    }
}
