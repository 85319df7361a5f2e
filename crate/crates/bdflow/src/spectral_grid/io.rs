//! Field snapshot format: raw little-endian f64 in row-major axis order
//! plus a JSON sidecar with the grid metadata.

use super::{make_grid, Grid, ScalarField};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("sidecar error: {0}")]
    Sidecar(#[from] serde_json::Error),
    #[error("grid error: {0}")]
    Grid(#[from] super::GridError),
    #[error("payload size {got} does not match grid ({want} values)")]
    SizeMismatch { got: usize, want: usize },
}

/// JSON sidecar stored next to each `.bin` payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub dim: usize,
    pub points_per_axis: usize,
    pub length: f64,
    pub name: String,
    pub time: f64,
}

fn sidecar_path(bin: &Path) -> std::path::PathBuf {
    bin.with_extension("json")
}

/// Write `field` to `path` (binary payload) and its JSON sidecar.
pub fn write_snapshot(
    path: &Path,
    field: &ScalarField,
    name: &str,
    time: f64,
) -> Result<(), SnapshotError> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    let sidecar = Sidecar {
        dim: grid.dim(),
        points_per_axis: grid.points_per_axis(),
        length: grid.length(),
        name: name.to_string(),
        time,
    };
    let json = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Read a snapshot back; the grid is rebuilt from the sidecar.
pub fn read_snapshot(path: &Path) -> Result<(ScalarField, Sidecar), SnapshotError> {
    let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let grid: Arc<Grid> = make_grid(sidecar.dim, sidecar.points_per_axis, sidecar.length)?;
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() != grid.len() * 8 {
        return Err(SnapshotError::SizeMismatch {
            got: buf.len() / 8,
            want: grid.len(),
        });
    }
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((ScalarField::from_values(&grid, values)?, sidecar))
}
