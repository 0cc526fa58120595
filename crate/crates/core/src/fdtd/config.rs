use serde::{Deserialize, Serialize};

use super::FdtdError;
use crate::geometry::{GridSpec, Vec3};

/// Largest stable Courant number for the 7-point stencil in 3D.
pub const CFL_LIMIT_3D: f64 = 0.577_350_269_189_625_8;

/// One-way attenuation through the absorbing layer when the peak damping is
/// left to its default.
pub const PML_TARGET_ATTENUATION_DB: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// m/s
    pub sound_speed: f64,
    /// m
    pub spacing: f64,
    pub cfl: f64,
    /// m, centred on the world origin
    pub domain_extent: [f64; 3],
    pub pml_layers: usize,
    /// 1/s at the outer edge of the layer; `None` derives it from
    /// [`PML_TARGET_ATTENUATION_DB`].
    pub pml_peak_damping: Option<f64>,
    /// s
    pub duration: f64,
    pub source: Vec3,
    pub receivers: Vec<Vec3>,
}

impl Default for SimConfig {
    fn default() -> Self {
        let extent = [1.5; 3];
        let c = 344.0;
        Self {
            sound_speed: c,
            spacing: 0.0015,
            cfl: 0.5,
            domain_extent: extent,
            pml_layers: 16,
            pml_peak_damping: None,
            duration: default_duration(extent, c),
            source: Vec3::ZERO,
            receivers: Vec::new(),
        }
    }
}

/// Two domain diagonals of travel.
pub fn default_duration(extent: [f64; 3], sound_speed: f64) -> f64 {
    2.0 * (extent[0].powi(2) + extent[1].powi(2) + extent[2].powi(2)).sqrt() / sound_speed
}

/// Δt = cfl · h / c.
pub fn time_step(sound_speed: f64, spacing: f64, cfl: f64) -> f64 {
    cfl * spacing / sound_speed
}

impl SimConfig {
    pub fn time_step(&self) -> f64 {
        time_step(self.sound_speed, self.spacing, self.cfl)
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.time_step()
    }

    /// ⌈duration / Δt⌉, ignoring rounding noise below 1e-9 of a step.
    pub fn step_count(&self) -> usize {
        (self.duration / self.time_step() - 1e-9).ceil().max(0.0) as usize
    }

    pub fn grid_spec(&self) -> Result<GridSpec, FdtdError> {
        GridSpec::centered(self.domain_extent, self.spacing, Vec3::ZERO).map_err(|e| FdtdError::InvalidConfig(e.to_string()))
    }

    pub fn peak_damping(&self) -> f64 {
        self.pml_peak_damping.unwrap_or_else(|| {
            let thickness = self.pml_layers as f64 * self.spacing;
            if thickness == 0.0 {
                0.0
            } else {
                // quadratic profile: ∫σ dx = σmax·L/3
                3.0 * self.sound_speed * (PML_TARGET_ATTENUATION_DB / 20.0 * std::f64::consts::LN_10) / thickness
            }
        })
    }

    pub fn validate(&self) -> Result<(), FdtdError> {
        let bad = |m: String| Err(FdtdError::InvalidConfig(m));
        if !(self.sound_speed > 0.0 && self.sound_speed.is_finite()) {
            return bad(format!("sound_speed must be positive, got {}", self.sound_speed));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return bad(format!("spacing must be positive, got {}", self.spacing));
        }
        if !(self.cfl > 0.0 && self.cfl <= CFL_LIMIT_3D) {
            return bad(format!("cfl must lie in (0, 1/sqrt(3)], got {}", self.cfl));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if let Some(d) = self.pml_peak_damping {
            if !(d >= 0.0 && d.is_finite()) {
                return bad(format!("pml_peak_damping must be non-negative, got {d}"));
            }
        }
        let spec = self.grid_spec()?;
        for (a, &n) in spec.dims.iter().enumerate() {
            if n <= 2 * self.pml_layers {
                return bad(format!("axis {a}: {n} cells leave no interior inside {} PML layers per side", self.pml_layers));
            }
        }
        Ok(())
    }
}
