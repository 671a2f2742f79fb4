//! Edge overlays: a JSON array of `{"a": [x, y, z], "b": [x, y, z]}` objects,
//! and `TPE1` binary (magic, u32 count, then six f32 per segment, little-endian).

use serde::{Deserialize, Serialize};

use super::{EdgeError, EdgeSegment};
use crate::geometry::Point;

pub const TPE_MAGIC: &[u8; 4] = b"TPE1";

#[derive(Serialize, Deserialize)]
struct JsonEdge {
    a: [f64; 3],
    b: [f64; 3],
}

pub fn edges_to_json(edges: &[EdgeSegment]) -> String {
    let list: Vec<JsonEdge> = edges
        .iter()
        .map(|e| JsonEdge {
            a: [e.a.x, e.a.y, e.a.z],
            b: [e.b.x, e.b.y, e.b.z],
        })
        .collect();
    serde_json::to_string(&list).expect("edge list serializes")
}

pub fn edges_from_json(text: &str) -> Result<Vec<EdgeSegment>, EdgeError> {
    let list: Vec<JsonEdge> = serde_json::from_str(text).map_err(|e| EdgeError::Format(e.to_string()))?;
    list.into_iter()
        .map(|e| EdgeSegment::new(Point::from(e.a), Point::from(e.b)))
        .collect()
}

pub fn edges_to_tpe(edges: &[EdgeSegment]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + edges.len() * 24);
    out.extend_from_slice(TPE_MAGIC);
    out.extend_from_slice(&(edges.len() as u32).to_le_bytes());
    for e in edges {
        for c in e.a.iter().chain(e.b.iter()) {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
    }
    out
}

pub fn edges_from_tpe(bytes: &[u8]) -> Result<Vec<EdgeSegment>, EdgeError> {
    if bytes.get(..4) != Some(TPE_MAGIC.as_slice()) {
        return Err(EdgeError::Format("missing TPE1 magic".into()));
    }
    let count = bytes
        .get(4..8)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
        .ok_or_else(|| EdgeError::Format("truncated header".into()))?;
    if bytes.len() != 8 + count * 24 {
        return Err(EdgeError::Format(format!(
            "expected {} bytes for {count} segments, found {}",
            8 + count * 24,
            bytes.len()
        )));
    }
    bytes[8..]
        .chunks_exact(24)
        .map(|chunk| {
            let f: Vec<f64> = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                .collect();
            EdgeSegment::new(Point::new(f[0], f[1], f[2]), Point::new(f[3], f[4], f[5]))
        })
        .collect()
}

/// Reads either format, sniffing the `TPE1` magic.
pub fn edges_from_bytes(bytes: &[u8]) -> Result<Vec<EdgeSegment>, EdgeError> {
    if bytes.starts_with(TPE_MAGIC) {
        edges_from_tpe(bytes)
    } else {
        let text = std::str::from_utf8(bytes).map_err(|e| EdgeError::Format(e.to_string()))?;
        edges_from_json(text)
    }
}
