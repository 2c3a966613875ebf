//! Field files: `n^2` little-endian `f64` samples in row-major order, with a
//! JSON sidecar `{"n", "L", "s", "N", "kind"}` next to them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub n: usize,
    #[serde(rename = "L")]
    pub extent: f64,
    pub s: f64,
    #[serde(rename = "N")]
    pub mass: f64,
    pub kind: String,
}

impl FieldMeta {
    pub fn new(field: &ScalarField, s: f64, kind: &str) -> Self {
        Self { n: field.grid().n(), extent: field.grid().extent(), s, mass: field.mass(), kind: kind.to_string() }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Path of the JSON sidecar belonging to a field file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `path` (raw samples) and its sidecar.
pub fn write_field(path: &Path, field: &ScalarField, meta: &FieldMeta) -> Result<()> {
    if meta.n != field.grid().n() || meta.extent != field.grid().extent() {
        return Err(Error::Config("field metadata disagrees with its grid".into()));
    }
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(io_err(path))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(meta).expect("metadata serializes");
    fs::write(&side, json).map_err(io_err(&side))
}

/// Reads a field file and its sidecar.
pub fn read_field(path: &Path) -> Result<(ScalarField, FieldMeta)> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(io_err(&side))?;
    let meta: FieldMeta =
        serde_json::from_str(&text).map_err(|e| Error::Format { path: side.clone(), reason: e.to_string() })?;
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() != 8 * meta.n * meta.n {
        return Err(Error::Format {
            path: path.into(),
            reason: format!("expected {} bytes for n = {}, found {}", 8 * meta.n * meta.n, meta.n, bytes.len()),
        });
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    let grid = Grid2D::new(meta.extent, meta.n)?;
    Ok((ScalarField::new(grid, values)?, meta))
}
