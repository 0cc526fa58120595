use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FdtdError, FieldState, Kernel, SimConfig};
use crate::geometry::{Vec3, VoxelGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverTraces {
    pub sample_rate: f64,
    pub traces: Vec<Vec<f32>>,
}

impl ReceiverTraces {
    pub fn len(&self) -> usize {
        self.traces.first().map_or(0, |t| t.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Trilinear stencil over node centres, used both to sample receivers and
/// to inject the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    taps: Vec<(usize, f64)>,
}

impl Probe {
    pub fn at(kernel: &Kernel, position: Vec3, what: &str) -> Result<Self, FdtdError> {
        let spec = kernel.grid();
        let g = spec.to_grid(position) - Vec3::new(0.5, 0.5, 0.5);
        let outside = || FdtdError::OutsideInterior { what: what.to_string(), position };
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let x = g.component(a);
            if !x.is_finite() || x < 0.0 || x > (spec.dims[a] - 1) as f64 {
                return Err(outside());
            }
            let f = x.floor();
            base[a] = f as usize;
            frac[a] = x - f;
        }
        let mut taps = Vec::with_capacity(8);
        for corner in 0..8 {
            let mut w = 1.0;
            let mut c = base;
            for a in 0..3 {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    c[a] += 1;
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            let idx = spec.index(c[0], c[1], c[2]);
            if kernel.is_pml(idx) {
                return Err(outside());
            }
            if kernel.is_rigid(idx) {
                return Err(FdtdError::Blocked { what: what.to_string(), position });
            }
            taps.push((idx, w));
        }
        Ok(Self { taps })
    }

    pub fn sample(&self, field: &[f32]) -> f32 {
        self.taps.iter().map(|&(i, w)| field[i] as f64 * w).sum::<f64>() as f32
    }

    /// Adds `value` spread over the same stencil (the adjoint of `sample`).
    /// On a node centre this is a single-node soft source.
    pub fn inject(&self, field: &mut [f32], value: f32) {
        for &(i, w) in &self.taps {
            field[i] += (value as f64 * w) as f32;
        }
    }

    pub fn taps(&self) -> &[(usize, f64)] {
        &self.taps
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Steps at which the pressure field is written out.
    pub snapshot_steps: Vec<usize>,
    pub snapshot_dir: Option<PathBuf>,
    /// Full-field finiteness check period in steps (receivers are checked
    /// every step).
    pub nan_check_interval: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { snapshot_steps: Vec::new(), snapshot_dir: None, nan_check_interval: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub dims: [usize; 3],
    pub spacing: f64,
    pub origin: [f64; 3],
    pub step: usize,
    pub time_s: f64,
    pub dtype: String,
    pub layout: String,
}

/// Writes `p_curr` as raw little-endian f32 plus a JSON sidecar; returns the
/// path of the raw volume.
pub fn write_snapshot(dir: &Path, kernel: &Kernel, state: &FieldState, step: usize, dt: f64) -> Result<PathBuf, FdtdError> {
    std::fs::create_dir_all(dir)?;
    let spec = kernel.grid();
    let raw = dir.join(format!("pressure_{step:06}.f32"));
    let bytes: Vec<u8> = state.p_curr.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(&raw, bytes)?;
    let meta = SnapshotMeta {
        dims: spec.dims,
        spacing: spec.spacing,
        origin: spec.origin.to_array(),
        step,
        time_s: step as f64 * dt,
        dtype: "f32le".into(),
        layout: "z-fastest: index = (i*ny + j)*nz + k".into(),
    };
    std::fs::write(raw.with_extension("json"), serde_json::to_vec_pretty(&meta).expect("plain struct"))?;
    Ok(raw)
}

/// Injects `source_signal` at the source position and records every receiver
/// for ⌈duration/Δt⌉ steps. Sample `n` of each trace is the pressure at
/// time `nΔt`, after that step's injection.
pub fn run(scene: &VoxelGrid, config: &SimConfig, source_signal: &[f32]) -> Result<ReceiverTraces, FdtdError> {
    run_with(scene, config, source_signal, &RunOptions::default())
}

pub fn run_with(
    scene: &VoxelGrid,
    config: &SimConfig,
    source_signal: &[f32],
    options: &RunOptions,
) -> Result<ReceiverTraces, FdtdError> {
    let kernel = Kernel::new(scene, config)?;
    let src = Probe::at(&kernel, config.source, "source")?;
    let probes = config
        .receivers
        .iter()
        .enumerate()
        .map(|(i, &r)| Probe::at(&kernel, r, &format!("receiver {i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let steps = config.step_count();
    let dt = config.time_step();
    let mut traces = vec![Vec::with_capacity(steps); probes.len()];
    let mut state = kernel.new_state();
    let interval = options.nan_check_interval.max(1);

    for n in 0..steps {
        if let Some(&s) = source_signal.get(n) {
            src.inject(&mut state.p_curr, s);
        }
        for (trace, probe) in traces.iter_mut().zip(&probes) {
            let v = probe.sample(&state.p_curr);
            if !v.is_finite() {
                return Err(FdtdError::Unstable { step: n as u64 });
            }
            trace.push(v);
        }
        if let Some(dir) = &options.snapshot_dir {
            if options.snapshot_steps.contains(&n) {
                write_snapshot(dir, &kernel, &state, n, dt)?;
            }
        }
        kernel.step(&mut state)?;
        if (n + 1) % interval == 0 && !state.all_finite() {
            return Err(FdtdError::Unstable { step: state.step_index });
        }
    }
    Ok(ReceiverTraces { sample_rate: config.sample_rate(), traces })
}
