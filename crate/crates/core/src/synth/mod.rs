//! Buzz stimulus synthesis: downward FM chirps, pulse trains, and binaural
//! echo rendering from an IR bank.

mod convolve;
mod render;
mod wav;

pub use convolve::convolve;
pub use render::{render_cell_echo, write_assets, EchoRenderer, Normalization, StimulusConfig};
pub use wav::{decode_wav, encode_wav, WAV_HEADER_LEN};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChirpParams {
    #[serde(rename = "f_start_hz")]
    pub f_start: f64,
    #[serde(rename = "f_end_hz")]
    pub f_end: f64,
    #[serde(rename = "duration_s")]
    pub duration: f64,
    #[serde(rename = "sample_rate_hz")]
    pub sample_rate: f64,
    /// Linear full-scale fraction.
    pub amplitude: f64,
}

impl Default for ChirpParams {
    fn default() -> Self {
        Self { f_start: 7000.0, f_end: 1000.0, duration: 0.010, sample_rate: 48000.0, amplitude: 0.9 }
    }
}

impl ChirpParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let nyquist = self.sample_rate / 2.0;
        let ok = |f: f64| f > 0.0 && f < nyquist;
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(SynthError::InvalidParams(format!("sample rate {} must be positive", self.sample_rate)));
        }
        if !ok(self.f_start) || !ok(self.f_end) {
            return Err(SynthError::InvalidParams(format!(
                "chirp frequencies {}..{} Hz must lie in (0, {nyquist})",
                self.f_start, self.f_end
            )));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(SynthError::InvalidParams(format!("chirp duration {} must be positive", self.duration)));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(SynthError::InvalidParams(format!("amplitude {} must lie in (0, 1]", self.amplitude)));
        }
        Ok(())
    }

    /// Number of samples with t = n/rate < duration.
    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate - 1e-9).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuzzParams {
    pub repeat_count: usize,
    #[serde(rename = "onset_interval_s")]
    pub onset_interval: f64,
}

impl Default for BuzzParams {
    fn default() -> Self {
        Self { repeat_count: 30, onset_interval: 0.030 }
    }
}

impl BuzzParams {
    pub fn validate(&self, chirp: &ChirpParams) -> Result<(), SynthError> {
        if self.repeat_count == 0 {
            return Err(SynthError::InvalidParams("repeat_count must be at least 1".into()));
        }
        if !(self.onset_interval >= chirp.duration) {
            return Err(SynthError::InvalidParams(format!(
                "onset interval {} s is shorter than the chirp ({} s)",
                self.onset_interval, chirp.duration
            )));
        }
        Ok(())
    }

    pub fn onset_samples(&self, sample_rate: f64) -> Vec<usize> {
        (0..self.repeat_count).map(|k| (k as f64 * self.onset_interval * sample_rate).round() as usize).collect()
    }
}

/// Stereo audio at `sample_rate`, samples nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct BinauralBuffer {
    pub sample_rate: f64,
    pub left: Vec<f32>,
    pub right: Vec<f32>,
}

impl BinauralBuffer {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn peak(&self) -> f32 {
        self.left.iter().chain(&self.right).fold(0.0f32, |m, s| m.max(s.abs()))
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid stimulus parameters: {0}")]
    InvalidParams(String),
    #[error("convolution input is empty")]
    EmptyInput,
    #[error("cell {0} is not in the bank")]
    UnknownCell(u32),
    #[error("bank has no entries")]
    EmptyBank,
    #[error("malformed WAV at byte {offset}: {message}")]
    Wav { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// s[n] = A·sin(2π(f0·t + (f1 − f0)/(2D)·t²)), t = n/rate, for t < D.
pub fn linear_chirp(params: &ChirpParams) -> Result<Vec<f64>, SynthError> {
    params.validate()?;
    let k = (params.f_end - params.f_start) / (2.0 * params.duration);
    Ok((0..params.sample_count())
        .map(|n| {
            let t = n as f64 / params.sample_rate;
            params.amplitude * (std::f64::consts::TAU * (params.f_start * t + k * t * t)).sin()
        })
        .collect())
}

/// Sums `repeat_count` copies of `pulse` at onsets round(k·interval·rate).
/// Pulses longer than the interval overlap and add.
pub fn buzz_train(pulse: &[f64], params: &BuzzParams, sample_rate: f64) -> Vec<f64> {
    let onsets = params.onset_samples(sample_rate);
    let len = onsets.last().map_or(0, |&o| o + pulse.len());
    let mut out = vec![0.0; len];
    for o in onsets {
        for (dst, s) in out[o..o + pulse.len()].iter_mut().zip(pulse) {
            *dst += s;
        }
    }
    out
}
