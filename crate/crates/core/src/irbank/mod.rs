//! Banks of binaural echo impulse responses, one pair per target cell.

mod container;
mod generate;
mod resample;

use std::collections::BTreeMap;

pub use container::{decode_bank, encode_bank, load_bank, load_bank_expecting, save_bank, BANK_MAGIC, BANK_VERSION};
pub use generate::{
    cell_scene, generate_cell, generate_ir_bank, generate_ir_bank_with, sim_fingerprint, BankOptions, CellScene,
};
pub use resample::{resample, resample_ir};

use crate::fdtd::FdtdError;
use crate::geometry::{GeometryError, ShapeMask};

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponsePair {
    pub cell_index: u32,
    pub left: Vec<f32>,
    pub right: Vec<f32>,
    pub sample_rate: f64,
}

impl ImpulseResponsePair {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrBank {
    pub target_id: String,
    /// (cols, rows) of the target mask.
    pub grid: (u32, u32),
    pub cell_size: f64,
    pub head_id: String,
    pub sim_fingerprint: [u8; 32],
    pub sample_rate: f64,
    pub entries: BTreeMap<u32, ImpulseResponsePair>,
}

impl IrBank {
    pub fn get(&self, cell: u32) -> Option<&ImpulseResponsePair> {
        self.entries.get(&cell)
    }

    pub fn fingerprint_hex(&self) -> String {
        self.sim_fingerprint.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks that entries cover exactly the occupied cells of `mask`.
    pub fn check_complete(&self, mask: &ShapeMask) -> Result<(), IrBankError> {
        if (mask.cols() as u32, mask.rows() as u32) != self.grid {
            return Err(IrBankError::Incomplete(format!(
                "bank grid {:?} does not match mask {}x{}",
                self.grid,
                mask.cols(),
                mask.rows()
            )));
        }
        let expected: Vec<u32> = mask.occupied().map(|i| i as u32).collect();
        let found: Vec<u32> = self.entries.keys().copied().collect();
        if expected != found {
            return Err(IrBankError::Incomplete(format!("expected cells {expected:?}, bank holds {found:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IrBankError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("cell {cell}: {source}")]
    Solver { cell: u32, source: FdtdError },
    #[error("cell {cell}: translated head intersects the target")]
    HeadIntersectsTarget { cell: u32 },
    #[error("cell {cell}: scene does not fit the domain: {message}")]
    DoesNotFit { cell: u32, message: String },
    #[error("cell {cell}: no free position found for the {marker} near the head surface")]
    MarkerBlocked { cell: u32, marker: String },
    #[error("bank has no entries")]
    Empty,
    #[error("bank incomplete: {0}")]
    Incomplete(String),
    #[error("corrupt bank at byte {offset}: {message}")]
    Corrupt { offset: usize, message: String },
    #[error("bank truncated at byte {offset} inside entry for cell {cell}")]
    Truncated { cell: u32, offset: usize },
    #[error("unsupported bank version {0} (expected 1)")]
    UnsupportedVersion(u16),
    #[error("cell {cell}: non-finite sample at index {index}")]
    InvalidSample { cell: u32, index: usize },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("unknown cell {0}")]
    UnknownCell(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
