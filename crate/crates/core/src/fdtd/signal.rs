//! Source waveforms for the solver, sampled at the solver rate.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSignal {
    /// One-sample unit delta.
    #[default]
    Impulse,
    /// Unit-peak Gaussian with standard deviation `sigma_samples`, centred
    /// `ceil(4σ)` samples after the start.
    Gaussian { sigma_samples: f64 },
}

impl SourceSignal {
    pub fn samples(&self) -> Vec<f32> {
        match *self {
            SourceSignal::Impulse => vec![1.0],
            SourceSignal::Gaussian { sigma_samples } => gaussian_pulse(sigma_samples),
        }
    }

    /// Sample index of the waveform's peak.
    pub fn peak_index(&self) -> usize {
        match *self {
            SourceSignal::Impulse => 0,
            SourceSignal::Gaussian { sigma_samples } => gaussian_delay(sigma_samples),
        }
    }
}

fn gaussian_delay(sigma: f64) -> usize {
    (4.0 * sigma).ceil() as usize
}

pub fn gaussian_pulse(sigma_samples: f64) -> Vec<f32> {
    assert!(sigma_samples > 0.0, "sigma must be positive");
    let d = gaussian_delay(sigma_samples);
    (0..=2 * d)
        .map(|n| {
            let x = (n as f64 - d as f64) / sigma_samples;
            (-0.5 * x * x).exp() as f32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_symmetric_unit_peak() {
        let g = gaussian_pulse(6.0);
        assert_eq!(g.len(), 49);
        assert_eq!(g[24], 1.0);
        for i in 0..g.len() {
            assert_eq!(g[i], g[g.len() - 1 - i]);
        }
        assert_eq!(SourceSignal::Gaussian { sigma_samples: 6.0 }.peak_index(), 24);
    }

    #[test]
    fn impulse_default() {
        assert_eq!(SourceSignal::default().samples(), vec![1.0]);
    }
}
