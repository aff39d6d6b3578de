use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{hr_in_range, BiometricSample, IngestError};

/// Piecewise-constant heart rate over time: each entry is
/// `(start_s, bpm)`, holding until the next entry starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpmProfile(pub Vec<(f64, f64)>);

impl BpmProfile {
    pub fn constant(bpm: f64) -> Self {
        Self(vec![(0.0, bpm)])
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let segs = &self.0;
        if segs.is_empty() {
            return Err(IngestError::BadProfile("empty profile".into()));
        }
        if segs[0].0 != 0.0 {
            return Err(IngestError::BadProfile("first segment must start at 0 s".into()));
        }
        for w in segs.windows(2) {
            if !(w[1].0 >= w[0].0) {
                return Err(IngestError::BadProfile("segment starts must be non-decreasing".into()));
            }
        }
        if let Some(&(_, bpm)) = segs.iter().find(|(_, b)| !hr_in_range(*b)) {
            return Err(IngestError::BadProfile(format!("{bpm} bpm outside (20, 250)")));
        }
        Ok(())
    }

    /// Rate in force at `t_s`.
    pub fn bpm_at(&self, t_s: f64) -> f64 {
        self.0.iter().take_while(|(start, _)| *start <= t_s).last().map_or(self.0[0].1, |s| s.1)
    }

    /// Beats elapsed between 0 and `t_s`.
    fn phase_at(&self, t_s: f64) -> f64 {
        let mut phase = 0.0;
        for (i, &(start, bpm)) in self.0.iter().enumerate() {
            if t_s <= start {
                break;
            }
            let end = self.0.get(i + 1).map_or(f64::INFINITY, |s| s.0).min(t_s);
            phase += (end - start) * bpm / 60.0;
        }
        phase
    }
}

/// Stateful PPG source that keeps pulse phase continuous across successive
/// chunks, so a scenario can chain constant-rate segments without a glitch.
#[derive(Debug, Clone)]
pub struct PpgGenerator {
    fs: f64,
    phase: f64,
}

impl PpgGenerator {
    pub fn new(fs: f64) -> Result<Self, IngestError> {
        if !(fs >= 10.0) || !fs.is_finite() {
            return Err(IngestError::BadSampleRate(fs));
        }
        Ok(Self { fs, phase: 0.0 })
    }

    /// Emits `duration_s` worth of samples starting at `start_ms`.
    pub fn generate(
        &mut self,
        start_ms: u64,
        profile: &BpmProfile,
        duration_s: f64,
        noise_std: f64,
        seed: u64,
    ) -> Result<Vec<BiometricSample>, IngestError> {
        profile.validate()?;
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(IngestError::BadProfile(format!("noise_std {noise_std} must be >= 0")));
        }
        if !(duration_s >= 0.0) || !duration_s.is_finite() {
            return Err(IngestError::BadProfile(format!("duration {duration_s} must be >= 0")));
        }
        let n = (duration_s * self.fs + 1e-9).floor() as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, noise_std).expect("finite non-negative std");
        let out = (0..n)
            .map(|i| {
                let t_s = i as f64 / self.fs;
                let phase = self.phase + profile.phase_at(t_s);
                let mut value = 0.5 * (1.0 - (std::f64::consts::TAU * phase).cos());
                if noise_std > 0.0 {
                    value += noise.sample(&mut rng);
                }
                let offset_ms = (i as f64 * 1000.0 / self.fs).round() as u64;
                BiometricSample::pg(start_ms + offset_ms, value)
            })
            .collect();
        self.phase += profile.phase_at(duration_s);
        Ok(out)
    }
}

/// Synthesizes a unit-amplitude raised-cosine pulse train following
/// `profile`, with seeded Gaussian noise. Phase zero is a trough, so maxima
/// fall at t = (k + 1/2)·60/bpm for a constant rate.
pub fn synth_ppg(
    profile: &BpmProfile,
    fs: f64,
    noise_std: f64,
    seed: u64,
    duration_s: f64,
) -> Result<Vec<BiometricSample>, IngestError> {
    PpgGenerator::new(fs)?.generate(0, profile, duration_s, noise_std, seed)
}
