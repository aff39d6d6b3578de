//! Biometric ingestion: the ASCII sensor line protocol, the PPG heart-rate
//! estimator, a synthetic PPG source, and the per-session sample buffer.

mod buffer;
mod estimator;
mod protocol;
mod synth;

pub use buffer::{HrTracker, IngestOutcome};
pub use estimator::{estimate_heart_rate, EstimatorConfig, HeartRateEstimate};
pub use protocol::{format_sample, parse_datagram, parse_sensor_line, BiometricSample, Tag};
pub use synth::{synth_ppg, BpmProfile, PpgGenerator};

/// Exclusive bounds for a plausible heart rate in bpm.
pub const HR_MIN_BPM: f64 = 20.0;
pub const HR_MAX_BPM: f64 = 250.0;

pub(crate) fn hr_in_range(bpm: f64) -> bool {
    bpm > HR_MIN_BPM && bpm < HR_MAX_BPM
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("malformed sensor line: {0}")]
    MalformedLine(String),
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("non-finite sample value")]
    NonFinite,
    #[error("heart rate {0} bpm outside (20, 250)")]
    RangeError(f64),
    #[error("only {found} peaks accepted, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("estimate rejected: inter-beat intervals too irregular")]
    LowConfidence,
    #[error("window spans {span_s:.3} s, need {needed_s} s")]
    WindowTooShort { span_s: f64, needed_s: f64 },
    #[error("sample rate {0} Hz is below 10 Hz")]
    BadSampleRate(f64),
    #[error("bad bpm profile: {0}")]
    BadProfile(String),
}
