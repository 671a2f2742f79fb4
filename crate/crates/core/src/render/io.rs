//! Depth image files: `<stem>.json` holds `{"width", "height", "unit"}` and
//! `<stem>.f32` holds the row-major little-endian f32 payload. Invalid pixels
//! of metric images are written as `-1`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DepthImage, DepthUnit};

pub const INVALID_SENTINEL: f32 = -1.0;

#[derive(Debug, Error)]
pub enum DepthIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("payload holds {got} bytes, expected {expected}")]
    Payload { got: usize, expected: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DepthHeader {
    pub width: usize,
    pub height: usize,
    pub unit: DepthUnit,
}

pub fn stem_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let mut json = stem.as_os_str().to_owned();
    json.push(".json");
    let mut raw = stem.as_os_str().to_owned();
    raw.push(".f32");
    (PathBuf::from(json), PathBuf::from(raw))
}

/// Encodes pixel values; invalid metric pixels become the negative sentinel.
pub fn encode_payload(img: &DepthImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.values.len() * 4);
    for (v, ok) in img.values.iter().zip(&img.valid) {
        let x = if !ok && img.unit == DepthUnit::Meters {
            INVALID_SENTINEL
        } else {
            *v as f32
        };
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_payload(header: &DepthHeader, bytes: &[u8]) -> Result<DepthImage, DepthIoError> {
    let n = header.width * header.height;
    if bytes.len() != n * 4 {
        return Err(DepthIoError::Payload {
            got: bytes.len(),
            expected: n * 4,
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    let valid = values
        .iter()
        .map(|&v| header.unit != DepthUnit::Meters || v >= 0.0)
        .collect();
    Ok(DepthImage {
        width: header.width,
        height: header.height,
        values,
        valid,
        unit: header.unit,
    })
}

pub fn write_depth(stem: &Path, img: &DepthImage) -> Result<(), DepthIoError> {
    let (json, raw) = stem_paths(stem);
    let header = DepthHeader {
        width: img.width,
        height: img.height,
        unit: img.unit,
    };
    fs::write(json, serde_json::to_string_pretty(&header).expect("header serializes"))?;
    fs::write(raw, encode_payload(img))?;
    Ok(())
}

pub fn read_depth(stem: &Path) -> Result<DepthImage, DepthIoError> {
    let (json, raw) = stem_paths(stem);
    let header: DepthHeader =
        serde_json::from_str(&fs::read_to_string(json)?).map_err(|e| DepthIoError::Header(e.to_string()))?;
    decode_payload(&header, &fs::read(raw)?)
}
