//! CSV and `rogf` readers and writers.
//!
//! `rogf` layout (all little-endian):
//!
//! ```text
//! "ROGF" | u32 version = 1 | u64 N | u64 d | u64 C | N*d f32 row-major | N u32 labels
//! ```
//!
//! A corruption mask is a sibling file (same stem, `.mask` extension) holding
//! N bytes, each 0 or 1.
//!
//! CSV: one sample per line, `d` features followed by an integer label, with an
//! optional first line `#d=<d>,C=<C>`. Without the header the class count is
//! the largest label plus one.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::FeatureSet;
use crate::error::{Result, RogError};

pub const ROGF_MAGIC: &[u8; 4] = b"ROGF";
pub const ROGF_VERSION: u32 = 1;
const ROGF_HEADER_LEN: usize = 4 + 4 + 3 * 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Rogf,
}

impl Format {
    /// Guesses from the extension; anything but `.csv` is treated as `rogf`.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Rogf,
        }
    }
}

impl FromStr for Format {
    type Err = RogError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "rogf" => Ok(Format::Rogf),
            other => Err(RogError::Config(format!("unknown format `{other}`"))),
        }
    }
}

pub fn load_feature_set(path: &Path, format: Format) -> Result<FeatureSet> {
    match format {
        Format::Csv => {
            let text = fs::read_to_string(path).map_err(|e| RogError::io(path, e))?;
            parse_csv(&text, path)
        }
        Format::Rogf => {
            let bytes = fs::read(path).map_err(|e| RogError::io(path, e))?;
            decode_rogf(&bytes, path)
        }
    }
}

pub fn save_feature_set(ds: &FeatureSet, path: &Path, format: Format) -> Result<()> {
    let bytes = match format {
        Format::Csv => write_csv(ds)?,
        Format::Rogf => encode_rogf(ds),
    };
    fs::write(path, bytes).map_err(|e| RogError::io(path, e))
}

fn parse_err(path: &Path, msg: impl Into<String>) -> RogError {
    RogError::Parse {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn parse_header(line: &str, path: &Path) -> Result<(usize, usize)> {
    let body = line.trim_start_matches('#').trim();
    let mut d = None;
    let mut c = None;
    for part in body.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| parse_err(path, format!("malformed header field `{part}`")))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| parse_err(path, format!("header value `{value}` is not an integer")))?;
        match key.trim() {
            "d" => d = Some(value),
            "C" => c = Some(value),
            other => return Err(parse_err(path, format!("unknown header key `{other}`"))),
        }
    }
    match (d, c) {
        (Some(d), Some(c)) => Ok((d, c)),
        _ => Err(parse_err(path, "header must declare both d and C")),
    }
}

fn parse_csv(text: &str, path: &Path) -> Result<FeatureSet> {
    let mut body = text;
    let mut declared = None;
    if let Some(first) = text.lines().next() {
        if first.trim_start().starts_with('#') {
            declared = Some(parse_header(first, path)?);
            body = &text[first.len()..];
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(body.as_bytes());

    let mut width = declared.map(|(d, _)| d + 1);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(RogError::Dimension(format!(
                "{}: record {} has {} fields, expected {w}",
                path.display(),
                line + 1,
                record.len()
            )));
        }
        if w < 2 {
            return Err(parse_err(path, "each row needs at least one feature and a label"));
        }
        for field in record.iter().take(w - 1) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, format!("`{field}` is not a number")))?;
            values.push(v);
        }
        let raw = &record[w - 1];
        let label: usize = raw
            .parse()
            .map_err(|_| parse_err(path, format!("label `{raw}` is not a non-negative integer")))?;
        labels.push(label);
    }

    let d = match width {
        Some(w) => w - 1,
        None => return Err(RogError::Validation(format!("{}: no samples", path.display()))),
    };
    let num_classes = match declared {
        Some((_, c)) => c,
        None => labels.iter().copied().max().map_or(0, |m| m + 1),
    };
    let features = DMatrix::from_row_slice(labels.len(), d, &values);
    FeatureSet::new(features, labels, num_classes)
}

fn write_csv(ds: &FeatureSet) -> Result<Vec<u8>> {
    let mut out = format!("#d={},C={}\n", ds.dim(), ds.num_classes()).into_bytes();
    {
        let mut writer = csv::WriterBuilder::new().from_writer(&mut out);
        let mut fields = Vec::with_capacity(ds.dim() + 1);
        for i in 0..ds.len() {
            fields.clear();
            fields.extend(ds.features().row(i).iter().map(|v| v.to_string()));
            fields.push(ds.labels()[i].to_string());
            writer
                .write_record(&fields)
                .map_err(|e| RogError::Validation(e.to_string()))?;
        }
        writer
            .flush()
            .map_err(|e| RogError::Validation(e.to_string()))?;
    }
    Ok(out)
}

/// Serializes to `rogf`. Features are narrowed to `f32`.
pub fn encode_rogf(ds: &FeatureSet) -> Vec<u8> {
    let (n, d) = (ds.len(), ds.dim());
    let mut out = Vec::with_capacity(ROGF_HEADER_LEN + 4 * n * (d + 1));
    out.extend_from_slice(ROGF_MAGIC);
    out.extend_from_slice(&ROGF_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&(ds.num_classes() as u64).to_le_bytes());
    for i in 0..n {
        for j in 0..d {
            out.extend_from_slice(&(ds.features()[(i, j)] as f32).to_le_bytes());
        }
    }
    for &y in ds.labels() {
        out.extend_from_slice(&(y as u32).to_le_bytes());
    }
    out
}

pub fn decode_rogf(bytes: &[u8], path: &Path) -> Result<FeatureSet> {
    if bytes.len() < ROGF_HEADER_LEN {
        return Err(parse_err(path, "file shorter than the rogf header"));
    }
    if &bytes[..4] != ROGF_MAGIC {
        return Err(parse_err(path, "missing ROGF magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != ROGF_VERSION {
        return Err(parse_err(path, format!("unsupported rogf version {version}")));
    }
    let read_u64 = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let (n, d, c) = (read_u64(8), read_u64(16), read_u64(24));
    let expected = (n as u128) * (d as u128 + 1) * 4 + ROGF_HEADER_LEN as u128;
    if expected != bytes.len() as u128 {
        return Err(parse_err(
            path,
            format!(
                "payload size mismatch: header says N={n}, d={d} ({expected} bytes), file has {}",
                bytes.len()
            ),
        ));
    }
    let (n, d) = (n as usize, d as usize);
    let mut at = ROGF_HEADER_LEN;
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        values.push(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64);
        at += 4;
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize);
        at += 4;
    }
    let features = DMatrix::from_row_slice(n, d, &values);
    FeatureSet::new(features, labels, c as usize)
}

/// `train.rogf` -> `train.mask`.
pub fn mask_path(path: &Path) -> PathBuf {
    path.with_extension("mask")
}

pub fn save_mask(path: &Path, mask: &[bool]) -> Result<()> {
    let bytes: Vec<u8> = mask.iter().map(|&m| m as u8).collect();
    fs::write(path, bytes).map_err(|e| RogError::io(path, e))
}

pub fn load_mask(path: &Path, expected_len: usize) -> Result<Vec<bool>> {
    let bytes = fs::read(path).map_err(|e| RogError::io(path, e))?;
    if bytes.len() != expected_len {
        return Err(RogError::Dimension(format!(
            "{}: mask has {} entries, expected {expected_len}",
            path.display(),
            bytes.len()
        )));
    }
    bytes
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(parse_err(path, format!("mask byte {other} is not 0 or 1"))),
        })
        .collect()
}
