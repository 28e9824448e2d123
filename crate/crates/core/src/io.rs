//! File formats.
//!
//! A field is a flat row-major float64 array in `name.csv` (header row
//! `value`, one number per line) or `name.bin` (little-endian), next to a
//! JSON header `name.json`. Charges and coefficient trees are single JSON
//! envelopes with one array per generation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::charge::{CubeCharge, FaberCoeffs};
use crate::dyadic::{CellField, DyadicFigure, VertexField};
use crate::error::{Error, Result};
use crate::TOOL_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Vertex,
    Cell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    Csv,
    Bin,
}

impl DataFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(Self::Csv),
            Some("bin") => Ok(Self::Bin),
            _ => Err(Error::Format(format!(
                "{}: expected a .csv or .bin extension",
                path.display()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub dim: usize,
    pub resolution: u32,
    pub kind: FieldKind,
    /// Data file name, relative to the header.
    pub data: String,
    pub layout: String,
    pub tool_version: String,
    /// Parameters of the run that produced the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

/// Header of a data file; a header path maps to itself.
pub fn header_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_values(path: &Path, values: &[f64]) -> Result<()> {
    match DataFormat::from_path(path)? {
        DataFormat::Csv => {
            let mut s = String::with_capacity(values.len() * 20 + 6);
            s.push_str("value\n");
            for v in values {
                s.push_str(&v.to_string());
                s.push('\n');
            }
            fs::write(path, s)?;
        }
        DataFormat::Bin => {
            let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(path, bytes)?;
        }
    }
    Ok(())
}

fn read_values(path: &Path) -> Result<Vec<f64>> {
    match DataFormat::from_path(path)? {
        DataFormat::Csv => {
            let text = fs::read_to_string(path)?;
            let mut lines = text.lines();
            match lines.next().map(str::trim) {
                Some("value") => {}
                other => {
                    return Err(Error::Format(format!(
                        "{}: expected header `value`, found {other:?}",
                        path.display()
                    )))
                }
            }
            lines
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    l.trim().parse::<f64>().map_err(|e| {
                        Error::Format(format!("{}: line {}: {e}", path.display(), i + 2))
                    })
                })
                .collect()
        }
        DataFormat::Bin => {
            let bytes = fs::read(path)?;
            if bytes.len() % 8 != 0 {
                return Err(Error::Format(format!(
                    "{}: length {} is not a multiple of 8",
                    path.display(),
                    bytes.len()
                )));
            }
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect())
        }
    }
}

fn write_field(
    path: &Path,
    dim: usize,
    resolution: u32,
    kind: FieldKind,
    values: &[f64],
    config: Option<&Value>,
) -> Result<()> {
    write_values(path, values)?;
    let header = FieldHeader {
        dim,
        resolution,
        kind,
        data: path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::Format(format!("{}: bad file name", path.display())))?
            .to_string(),
        layout: "row-major".into(),
        tool_version: TOOL_VERSION.into(),
        config: config.cloned(),
    };
    fs::write(header_path(path), serde_json::to_string_pretty(&header)?)?;
    Ok(())
}

fn read_field(path: &Path, kind: FieldKind) -> Result<(FieldHeader, Vec<f64>)> {
    let hp = header_path(path);
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(&hp)?)?;
    if header.kind != kind {
        return Err(Error::Format(format!(
            "{}: expected a {kind:?} field, found {:?}",
            hp.display(),
            header.kind
        )));
    }
    let data = hp
        .parent()
        .map(|p| p.join(&header.data))
        .unwrap_or_else(|| PathBuf::from(&header.data));
    let values = read_values(&data)?;
    Ok((header, values))
}

/// Writes the data file at `path` (`.csv` or `.bin`) and its JSON header.
pub fn write_vertex_field(path: &Path, f: &VertexField<f64>) -> Result<()> {
    write_field(path, f.dim(), f.resolution(), FieldKind::Vertex, f.values(), None)
}

/// [`write_vertex_field`] with a config echo in the header.
pub fn write_vertex_field_with_config(path: &Path, f: &VertexField<f64>, config: &Value) -> Result<()> {
    write_field(path, f.dim(), f.resolution(), FieldKind::Vertex, f.values(), Some(config))
}

/// Reads a vertex field from its header or its data file.
pub fn read_vertex_field(path: &Path) -> Result<VertexField<f64>> {
    let (h, v) = read_field(path, FieldKind::Vertex)?;
    VertexField::new(h.dim, h.resolution, v)
}

pub fn write_cell_field(path: &Path, f: &CellField<f64>) -> Result<()> {
    write_field(path, f.dim(), f.resolution(), FieldKind::Cell, f.values(), None)
}

pub fn read_cell_field(path: &Path) -> Result<CellField<f64>> {
    let (h, v) = read_field(path, FieldKind::Cell)?;
    CellField::new(h.dim, h.resolution, v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChargeKind {
    CubeCharge,
    FaberCoeffs,
}

/// JSON envelope shared by charges and coefficient trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeEnvelope {
    pub dim: usize,
    pub depth: u32,
    pub kind: ChargeKind,
    pub layout: String,
    pub tool_version: String,
    /// `ω(h_{-1})`; present for coefficient trees only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exceptional: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
    pub levels: Vec<Vec<f64>>,
}

impl ChargeEnvelope {
    pub fn from_charge(cc: &CubeCharge<f64>) -> Self {
        Self {
            dim: cc.dim(),
            depth: cc.depth(),
            kind: ChargeKind::CubeCharge,
            layout: "row-major".into(),
            tool_version: TOOL_VERSION.into(),
            exceptional: None,
            config: None,
            levels: cc.levels().to_vec(),
        }
    }

    pub fn from_coeffs(fc: &FaberCoeffs<f64>) -> Self {
        Self {
            dim: fc.dim(),
            depth: fc.depth(),
            kind: ChargeKind::FaberCoeffs,
            layout: "row-major".into(),
            tool_version: TOOL_VERSION.into(),
            exceptional: Some(fc.exceptional()),
            config: None,
            levels: fc.levels().to_vec(),
        }
    }

    pub fn with_config(mut self, config: Value) -> Self {
        self.config = Some(config);
        self
    }

    fn check(&self, kind: ChargeKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Format(format!("expected {kind:?}, found {:?}", self.kind)));
        }
        if self.layout != "row-major" {
            return Err(Error::Format(format!("unsupported layout {}", self.layout)));
        }
        if self.levels.len() != self.depth as usize + usize::from(kind == ChargeKind::CubeCharge) {
            return Err(Error::Format(format!(
                "depth {} disagrees with {} generations",
                self.depth,
                self.levels.len()
            )));
        }
        Ok(())
    }

    /// Rebuilds the charge, checking additivity.
    pub fn into_charge(self) -> Result<CubeCharge<f64>> {
        self.check(ChargeKind::CubeCharge)?;
        let cc = CubeCharge::from_cube_values(self.dim, self.levels)?;
        Ok(cc)
    }

    pub fn into_coeffs(self) -> Result<FaberCoeffs<f64>> {
        self.check(ChargeKind::FaberCoeffs)?;
        let e = self
            .exceptional
            .ok_or_else(|| Error::Format("missing exceptional coefficient".into()))?;
        FaberCoeffs::new(self.dim, e, self.levels)
    }
}

pub fn read_envelope(path: &Path) -> Result<ChargeEnvelope> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_envelope(path: &Path, env: &ChargeEnvelope) -> Result<()> {
    fs::write(path, serde_json::to_string(env)?)?;
    Ok(())
}

pub fn write_charge(path: &Path, cc: &CubeCharge<f64>) -> Result<()> {
    write_envelope(path, &ChargeEnvelope::from_charge(cc))
}

pub fn read_charge(path: &Path) -> Result<CubeCharge<f64>> {
    read_envelope(path)?.into_charge()
}

pub fn write_coeffs(path: &Path, fc: &FaberCoeffs<f64>) -> Result<()> {
    write_envelope(path, &ChargeEnvelope::from_coeffs(fc))
}

pub fn read_coeffs(path: &Path) -> Result<FaberCoeffs<f64>> {
    read_envelope(path)?.into_coeffs()
}

/// `{"dim": d, "cubes": [{"gen": n, "pos": [...]}, ...]}`
pub fn read_figure(path: &Path) -> Result<DyadicFigure> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_figure(path: &Path, fig: &DyadicFigure) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(fig)?)?;
    Ok(())
}
