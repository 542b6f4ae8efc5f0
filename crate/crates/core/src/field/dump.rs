//! Binary field dumps with a JSON sidecar.
//!
//! `<stem>.bin` holds `2 n^2` little-endian f64 values: the real plane then the
//! imaginary plane, both row-major. `<stem>.json` holds the metadata.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ComplexField, Grid2D, ScalarField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub n: usize,
    pub half_extent: f64,
    #[serde(default)]
    pub center: [f64; 2],
    pub epsilon: f64,
    pub omega: f64,
    pub lambda: f64,
    pub kind: String,
}

impl FieldMeta {
    pub fn new(grid: &Grid2D, epsilon: f64, omega: f64, lambda: f64, kind: &str) -> Self {
        Self {
            n: grid.n,
            half_extent: grid.half_extent,
            center: grid.center,
            epsilon,
            omega,
            lambda,
            kind: kind.to_string(),
        }
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::centered(self.n, self.half_extent, self.center)
    }
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

pub fn dump_complex(stem: &Path, u: &ComplexField, meta: &FieldMeta) -> Result<()> {
    if meta.grid()? != u.grid {
        return Err(Error::GridMismatch);
    }
    let mut bytes = Vec::with_capacity(16 * u.values.len());
    for z in &u.values {
        bytes.extend_from_slice(&z.re.to_le_bytes());
    }
    for z in &u.values {
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    let (bin, json) = paths(stem);
    write_atomic(&bin, &bytes)?;
    write_atomic(&json, serde_json::to_string_pretty(meta)?.as_bytes())
}

/// Real fields are stored with a zero imaginary plane.
pub fn dump_scalar(stem: &Path, f: &ScalarField, meta: &FieldMeta) -> Result<()> {
    dump_complex(stem, &f.to_complex(), meta)
}

pub fn load_complex(stem: &Path) -> Result<(ComplexField, FieldMeta)> {
    let (bin, json) = paths(stem);
    let meta: FieldMeta = serde_json::from_slice(&read(&json)?)?;
    let grid = meta.grid()?;
    let bytes = read(&bin)?;
    let len = grid.len();
    if bytes.len() != 16 * len {
        return Err(Error::Config(format!(
            "{}: expected {} bytes, found {}",
            bin.display(),
            16 * len,
            bytes.len()
        )));
    }
    let word = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let values = (0..len).map(|k| Complex64::new(word(k), word(len + k))).collect();
    Ok((ComplexField { grid, values }, meta))
}

pub fn load_scalar(stem: &Path) -> Result<(ScalarField, FieldMeta)> {
    let (u, meta) = load_complex(stem)?;
    Ok((ScalarField { grid: u.grid, values: u.values.iter().map(|z| z.re).collect() }, meta))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.display().to_string()),
        _ => Error::Io(e),
    })
}
