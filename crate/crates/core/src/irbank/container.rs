//! Binary `.eirb` container.
//!
//! Little-endian layout: magic `EIRB`, u16 version, u16 flags, u32 cols,
//! u32 rows, u32 entry count, f64 sample rate, 32-byte fingerprint, then per
//! entry u32 cell index, u32 N, N f32 left, N f32 right. When flag bit 0 is
//! set a u32-length-prefixed JSON block with `target_id`, `head_id` and
//! `cell_size` follows the entries. A CRC32 of everything before it closes
//! the file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ImpulseResponsePair, IrBank, IrBankError};
use crate::geometry::DEFAULT_CELL_SIZE;

pub const BANK_MAGIC: &[u8; 4] = b"EIRB";
pub const BANK_VERSION: u16 = 1;
const FLAG_METADATA: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 4 + 4 + 4 + 8 + 32;

#[derive(Serialize, Deserialize)]
struct Metadata {
    target_id: String,
    head_id: String,
    cell_size: f64,
}

pub fn encode_bank(bank: &IrBank) -> Result<Vec<u8>, IrBankError> {
    if bank.entries.is_empty() {
        return Err(IrBankError::Empty);
    }
    let samples: usize = bank.entries.values().map(|p| 2 * p.left.len()).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * bank.entries.len() + 4 * samples + 128);
    out.extend_from_slice(BANK_MAGIC);
    out.extend_from_slice(&BANK_VERSION.to_le_bytes());
    out.extend_from_slice(&FLAG_METADATA.to_le_bytes());
    out.extend_from_slice(&bank.grid.0.to_le_bytes());
    out.extend_from_slice(&bank.grid.1.to_le_bytes());
    out.extend_from_slice(&(bank.entries.len() as u32).to_le_bytes());
    out.extend_from_slice(&bank.sample_rate.to_le_bytes());
    out.extend_from_slice(&bank.sim_fingerprint);
    for (&cell, pair) in &bank.entries {
        if pair.left.len() != pair.right.len() {
            return Err(IrBankError::Corrupt {
                offset: out.len(),
                message: format!("cell {cell}: left has {} samples, right has {}", pair.left.len(), pair.right.len()),
            });
        }
        out.extend_from_slice(&cell.to_le_bytes());
        out.extend_from_slice(&(pair.left.len() as u32).to_le_bytes());
        for s in pair.left.iter().chain(&pair.right) {
            out.extend_from_slice(&s.to_le_bytes());
        }
    }
    let meta = serde_json::to_vec(&Metadata {
        target_id: bank.target_id.clone(),
        head_id: bank.head_id.clone(),
        cell_size: bank.cell_size,
    })
    .expect("metadata serializes");
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.data.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(s)
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes(b.try_into().unwrap()))
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Option<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4)?)?;
        Some(bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect())
    }
}

fn corrupt(offset: usize, message: impl Into<String>) -> IrBankError {
    IrBankError::Corrupt { offset, message: message.into() }
}

/// Parses and validates a container. `fallback_id` names the target when the
/// file carries no metadata block.
pub fn decode_bank(data: &[u8], fallback_id: &str) -> Result<IrBank, IrBankError> {
    let mut r = Reader { data, pos: 0 };
    let short = |at: usize| corrupt(at, "file ends inside the header");
    if r.take(4).ok_or_else(|| short(0))? != BANK_MAGIC {
        return Err(corrupt(0, "bad magic, expected \"EIRB\""));
    }
    let version = r.u16().ok_or_else(|| short(4))?;
    if version != BANK_VERSION {
        return Err(IrBankError::UnsupportedVersion(version));
    }
    let flags = r.u16().ok_or_else(|| short(6))?;
    if flags & !FLAG_METADATA != 0 {
        return Err(corrupt(6, format!("unknown flags {flags:#06x}")));
    }
    let cols = r.u32().ok_or_else(|| short(8))?;
    let rows = r.u32().ok_or_else(|| short(12))?;
    let count = r.u32().ok_or_else(|| short(16))?;
    let sample_rate = r.f64().ok_or_else(|| short(20))?;
    let mut sim_fingerprint = [0u8; 32];
    sim_fingerprint.copy_from_slice(r.take(32).ok_or_else(|| short(28))?);
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(corrupt(20, format!("invalid sample rate {sample_rate}")));
    }
    if count == 0 {
        return Err(IrBankError::Empty);
    }
    let cells = cols as u64 * rows as u64;

    let mut entries = BTreeMap::new();
    for _ in 0..count {
        let start = r.pos;
        let cell = r.u32().ok_or_else(|| corrupt(start, "file ends inside an entry header"))?;
        let n = r.u32().ok_or(IrBankError::Truncated { cell, offset: r.pos })? as usize;
        if cell as u64 >= cells {
            return Err(corrupt(start, format!("cell {cell} outside the {cols}x{rows} grid")));
        }
        if entries.contains_key(&cell) {
            return Err(corrupt(start, format!("duplicate entry for cell {cell}")));
        }
        let body = r.pos;
        let left = r.f32s(n).ok_or(IrBankError::Truncated { cell, offset: body })?;
        let right = r.f32s(n).ok_or(IrBankError::Truncated { cell, offset: body })?;
        if let Some(index) = left.iter().chain(&right).position(|s| !s.is_finite()) {
            return Err(IrBankError::InvalidSample { cell, index });
        }
        entries.insert(cell, ImpulseResponsePair { cell_index: cell, left, right, sample_rate });
    }

    let (target_id, head_id, cell_size) = if flags & FLAG_METADATA != 0 {
        let at = r.pos;
        let len = r.u32().ok_or_else(|| corrupt(at, "file ends before the metadata block"))? as usize;
        let json = r.take(len).ok_or_else(|| corrupt(at, "file ends inside the metadata block"))?;
        let meta: Metadata = serde_json::from_slice(json).map_err(|e| corrupt(at + 4, format!("metadata: {e}")))?;
        (meta.target_id, meta.head_id, meta.cell_size)
    } else {
        (fallback_id.to_string(), String::new(), DEFAULT_CELL_SIZE)
    };

    let body_end = r.pos;
    let stored = r.u32().ok_or_else(|| corrupt(body_end, "missing trailing checksum"))?;
    if r.pos != data.len() {
        return Err(corrupt(r.pos, format!("{} unexpected trailing bytes", data.len() - r.pos)));
    }
    let computed = crc32fast::hash(&data[..body_end]);
    if stored != computed {
        return Err(IrBankError::Checksum { stored, computed });
    }
    Ok(IrBank { target_id, grid: (cols, rows), cell_size, head_id, sim_fingerprint, sample_rate, entries })
}

/// Writes atomically via a sibling temporary file.
pub fn save_bank(bank: &IrBank, path: impl AsRef<Path>) -> Result<(), IrBankError> {
    let path = path.as_ref();
    let bytes = encode_bank(bank)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, &bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_bank(path: impl AsRef<Path>) -> Result<IrBank, IrBankError> {
    let path = path.as_ref();
    let data = std::fs::read(path)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    decode_bank(&data, &stem)
}

/// Loads a bank and warns when it was produced by a different configuration.
pub fn load_bank_expecting(path: impl AsRef<Path>, fingerprint: &[u8; 32]) -> Result<IrBank, IrBankError> {
    let path = path.as_ref();
    let bank = load_bank(path)?;
    if &bank.sim_fingerprint != fingerprint {
        log::warn!(
            "{}: simulation fingerprint {} does not match the current configuration",
            path.display(),
            bank.fingerprint_hex()
        );
    }
    Ok(bank)
}
