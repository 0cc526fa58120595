//! Explicit wave-equation FDTD solver with absorbing boundary layers.

mod config;
mod run;
mod signal;
mod solver;

pub use config::{default_duration, time_step, SimConfig, CFL_LIMIT_3D, PML_TARGET_ATTENUATION_DB};
pub use run::{run, run_with, write_snapshot, Probe, ReceiverTraces, RunOptions, SnapshotMeta};
pub use signal::{gaussian_pulse, SourceSignal};
pub use solver::{step, FieldState, Kernel, PmlCell};

use crate::geometry::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum FdtdError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("grid dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: [usize; 3], found: [usize; 3] },
    #[error("rigid voxel {voxel:?} lies in or against the absorbing layer")]
    RigidInPml { voxel: [usize; 3] },
    #[error("{what} at {position:?} is outside the non-absorbing interior")]
    OutsideInterior { what: String, position: Vec3 },
    #[error("{what} at {position:?} touches a rigid voxel")]
    Blocked { what: String, position: Vec3 },
    #[error("non-finite pressure detected at step {step}")]
    Unstable { step: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
