//! Field files and run configuration.
//!
//! A field file is
//!
//! ```text
//! b"SHRFIELD" | u64 LE header length | JSON header | nx*ny f64 LE
//! ```
//!
//! with the payload in physical order, `x` fastest. Decoding followed by
//! encoding reproduces the input byte for byte.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decay::DecayOptions;
use crate::error::{Error, Result};
use crate::evolution::EvolveConfig;
use crate::functionals::PhysicsParams;
use crate::grid::{Field, Grid};
use crate::solver::SolverConfig;

pub const MAGIC: &[u8; 8] = b"SHRFIELD";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub format_version: u32,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub c: f64,
    pub m: f64,
    /// RFC 3339 timestamp.
    pub created: String,
    pub producer: String,
}

impl FieldHeader {
    /// Header for `field` stamped with the current time.
    pub fn for_field(field: &Field, c: f64, m: f64, producer: impl Into<String>) -> Self {
        let g = field.grid();
        FieldHeader {
            format_version: FORMAT_VERSION,
            nx: g.nx(),
            ny: g.ny(),
            lx: g.lx(),
            ly: g.ly(),
            c,
            m,
            created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            producer: producer.into(),
        }
    }
}

pub fn encode_field(field: &Field, header: &FieldHeader) -> Result<Vec<u8>> {
    let g = field.grid();
    if header.nx != g.nx() || header.ny != g.ny() || header.lx != g.lx() || header.ly != g.ly() {
        return Err(Error::arg("header grid does not describe the field"));
    }
    let json = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(16 + json.len() + 8 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_field(bytes: &[u8]) -> Result<(Field, FieldHeader)> {
    let corrupt = |m: String| Error::CorruptFile(m);
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(corrupt("missing SHRFIELD magic".into()));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if hlen > body.len() {
        return Err(corrupt(format!("header length {hlen} exceeds file size")));
    }
    let header: FieldHeader = serde_json::from_slice(&body[..hlen])
        .map_err(|e| corrupt(format!("bad header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format_version {}", header.format_version)));
    }
    let payload = &body[hlen..];
    let expected = header
        .nx
        .checked_mul(header.ny)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| corrupt("header dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(corrupt(format!(
            "payload has {} bytes, header {}x{} needs {expected}",
            payload.len(),
            header.nx,
            header.ny
        )));
    }
    let grid = Grid::new(header.nx, header.ny, header.lx, header.ly)
        .map_err(|e| corrupt(format!("header grid invalid: {e}")))?;
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let field = Field::new(grid, values).map_err(|e| corrupt(e.to_string()))?;
    Ok((field, header))
}

pub fn write_field(path: impl AsRef<Path>, field: &Field, header: &FieldHeader) -> Result<()> {
    fs::write(path, encode_field(field, header)?)?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<(Field, FieldHeader)> {
    decode_field(&fs::read(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nx: 256, ny: 256, lx: 64.0 * PI, ly: 64.0 * PI }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<std::sync::Arc<Grid>> {
        Grid::new(self.nx, self.ny, self.lx, self.ly).map_err(|e| match e {
            Error::Argument(m) => Error::config("grid", m),
            other => other,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub snapshots: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicsParams,
    pub solver: SolverConfig,
    pub evolve: EvolveConfig,
    pub output: OutputConfig,
    pub decay: DecayOptions,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            Error::config(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config { key, message } => Error::config(format!("{}: {key}", path.display()), message),
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.physics.validate().map_err(|e| Error::config("physics", e.to_string()))?;
        self.solver.validate()?;
        self.evolve.validate()?;
        Ok(())
    }
}
