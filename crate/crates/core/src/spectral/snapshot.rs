//! Field snapshots: a flat little-endian `f64` array (row-major) plus a JSON
//! sidecar describing the grid.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::field::{Representation, ScalarField};
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub counts: Vec<usize>,
    pub representation: Representation,
    pub time: f64,
}

/// Paths `<stem>.bin` and `<stem>.json`.
pub fn snapshot_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

pub fn write_snapshot<T: Real>(stem: &Path, field: &ScalarField<T>, time: T) -> Result<()> {
    let grid = field.grid();
    let header = SnapshotHeader {
        dim: grid.dim(),
        lengths: grid.lengths().iter().map(|l| l.to_f64_lossy()).collect(),
        counts: grid.counts().to_vec(),
        representation: field.representation(),
        time: time.to_f64_lossy(),
    };
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    let (bin, json) = snapshot_paths(stem);
    fs::write(&bin, bytes).map_err(|e| Error::Io(format!("{}: {e}", bin.display())))?;
    let text = serde_json::to_string_pretty(&header).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(&json, text).map_err(|e| Error::Io(format!("{}: {e}", json.display())))?;
    Ok(())
}

pub fn read_snapshot<T: Real>(stem: &Path) -> Result<(ScalarField<T>, T)> {
    let (bin, json) = snapshot_paths(stem);
    let text = fs::read_to_string(&json).map_err(|e| Error::Io(format!("{}: {e}", json.display())))?;
    let header: SnapshotHeader = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
    if header.dim != header.counts.len() {
        return Err(Error::Io("sidecar dim does not match counts".into()));
    }
    let grid = GridSpec::new(
        header.lengths.iter().map(|&l| T::lit(l)).collect(),
        header.counts.clone(),
    )?;
    let bytes = fs::read(&bin).map_err(|e| Error::Io(format!("{}: {e}", bin.display())))?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Io(format!(
            "expected {} bytes, found {}",
            8 * grid.len(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect();
    let field = ScalarField::with_representation(grid, values, header.representation)?;
    Ok((field, T::lit(header.time)))
}
