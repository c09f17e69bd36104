//! Binary persistence of field samples.
//!
//! A field file is a 32-byte little-endian header (magic `LFPPGRID`, then
//! version, nx, ny, m, n as `u32`, then four reserved zero bytes) followed by
//! the node values as row-major `f64`. A JSON sidecar with the same stem and
//! extension `json` stores the grid, provenance and kernel hash.

use super::field::{FieldSample, Provenance};
use super::grid::GridSpec;
use crate::error::{LfppError, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// File magic.
pub const MAGIC: &[u8; 8] = b"LFPPGRID";
/// Current format version.
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    grid: GridSpec,
    band: (u32, u32),
    provenance: Provenance,
}

/// Path of the JSON sidecar belonging to a binary field file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `field` to `path` and its sidecar next to it.
pub fn write_field(field: &FieldSample, path: &Path) -> Result<()> {
    let (nx, ny) = (field.grid.nx(), field.grid.ny());
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * field.values.len());
    bytes.extend_from_slice(MAGIC);
    for v in [VERSION, nx as u32, ny as u32, field.band.0, field.band.1, 0] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for v in &field.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    let sidecar = Sidecar { grid: field.grid, band: field.band, provenance: field.provenance.clone() };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads a field written by [`write_field`], checking header and sidecar consistency.
pub fn read_field(path: &Path) -> Result<FieldSample> {
    let bytes = fs::read(path)?;
    let bad = |msg: String| Err(LfppError::Validation(format!("{}: {msg}", path.display())));
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return bad("not an LFPPGRID file".into());
    }
    let word = |k: usize| u32::from_le_bytes(bytes[8 + 4 * k..12 + 4 * k].try_into().expect("4 bytes"));
    let (version, nx, ny, m, n) = (word(0), word(1) as usize, word(2) as usize, word(3), word(4));
    if version != VERSION {
        return bad(format!("unsupported version {version}"));
    }
    if bytes.len() != HEADER_LEN + 8 * nx * ny {
        return bad(format!("expected {} values, found {} bytes of data", nx * ny, bytes.len() - HEADER_LEN));
    }
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if sidecar.grid.nx() != nx || sidecar.grid.ny() != ny || sidecar.band != (m, n) {
        return bad("header and sidecar disagree".into());
    }
    let values = bytes[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(FieldSample { grid: sidecar.grid, band: (m, n), values, provenance: sidecar.provenance })
}
