//! Mesh readers and writers.
//!
//! * OBJ: ASCII, only `v` and `f` records are read; polygons are fan
//!   triangulated, `v/vt/vn` index forms and negative indices are accepted.
//! * STL: binary, little-endian (80-byte header, u32 count, 50 bytes/face).
//! * Native `TPM1`: magic `TPM1`, u32 vertex count, u32 face count,
//!   f32 vertex triples, u32 face triples, all little-endian.
//!
//! Every reader welds duplicate vertices within [`DEFAULT_WELD_TOLERANCE`].

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{MeshError, TriMesh, DEFAULT_WELD_TOLERANCE};
use crate::geometry::Point;

pub const TPM_MAGIC: &[u8; 4] = b"TPM1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Stl,
    Binary,
}

impl MeshFormat {
    /// Guesses the format from the file extension (`obj`, `stl`, `tpm`).
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(Self::Obj),
            "stl" => Some(Self::Stl),
            "tpm" | "bin" => Some(Self::Binary),
            _ => None,
        }
    }
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh, MeshError> {
    load_mesh_with_tolerance(path, format, DEFAULT_WELD_TOLERANCE)
}

pub fn load_mesh_with_tolerance(path: &Path, format: MeshFormat, weld_tolerance: f64) -> Result<TriMesh, MeshError> {
    let bytes = fs::read(path)?;
    let (vertices, faces) = match format {
        MeshFormat::Obj => parse_obj(std::str::from_utf8(&bytes).map_err(|e| MeshError::Parse {
            line: 0,
            message: e.to_string(),
        })?)?,
        MeshFormat::Stl => parse_stl(&bytes)?,
        MeshFormat::Binary => parse_tpm(&bytes)?,
    };
    TriMesh::new_welded(vertices, faces, weld_tolerance)
}

pub fn save_mesh(mesh: &TriMesh, path: &Path, format: MeshFormat) -> Result<(), MeshError> {
    let bytes = match format {
        MeshFormat::Obj => write_obj(mesh).into_bytes(),
        MeshFormat::Stl => write_stl(mesh),
        MeshFormat::Binary => write_tpm(mesh),
    };
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

type RawMesh = (Vec<Point>, Vec<[u32; 3]>);

pub fn parse_obj(text: &str) -> Result<RawMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        let err = |message: String| MeshError::Parse {
            line: lineno + 1,
            message,
        };
        match it.next() {
            Some("v") => {
                let coords: Vec<f64> = it
                    .by_ref()
                    .take(3)
                    .map(|s| s.parse::<f64>().map_err(|e| err(format!("bad coordinate {s:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if coords.len() != 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                vertices.push(Point::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first.parse().map_err(|e| err(format!("bad face index {tok:?}: {e}")))?;
                    let resolved = match i {
                        0 => return Err(err("face index 0 is invalid (OBJ is 1-based)".into())),
                        i if i > 0 => i - 1,
                        i => vertices.len() as i64 + i,
                    };
                    if resolved < 0 || resolved > u32::MAX as i64 {
                        return Err(err(format!("face index {i} out of range")));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(err("face needs at least three vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

pub fn write_obj(mesh: &TriMesh) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    for v in mesh.vertices() {
        // `{}` on f64 prints the shortest string that round-trips exactly.
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
}

fn read_f32(bytes: &[u8], at: usize) -> Option<f32> {
    bytes.get(at..at + 4).map(|b| f32::from_le_bytes(b.try_into().unwrap()))
}

pub fn parse_stl(bytes: &[u8]) -> Result<RawMesh, MeshError> {
    let count = read_u32(bytes, 80).ok_or_else(|| MeshError::Binary("STL shorter than its header".into()))? as usize;
    let needed = 84 + count * 50;
    if bytes.len() < needed {
        return Err(MeshError::Binary(format!(
            "STL declares {count} triangles but holds {} bytes (need {needed})",
            bytes.len()
        )));
    }
    let mut vertices = Vec::with_capacity(count * 3);
    let mut faces = Vec::with_capacity(count);
    for t in 0..count {
        let base = 84 + t * 50 + 12;
        for k in 0..3 {
            let at = base + k * 12;
            let c = [0, 1, 2].map(|j| read_f32(bytes, at + 4 * j).unwrap() as f64);
            vertices.push(Point::new(c[0], c[1], c[2]));
        }
        let i = (t * 3) as u32;
        faces.push([i, i + 1, i + 2]);
    }
    Ok((vertices, faces))
}

pub fn write_stl(mesh: &TriMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + mesh.faces().len() * 50);
    let mut header = [0u8; 80];
    header[..20].copy_from_slice(b"terrain-perception  ");
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.faces().len() as u32).to_le_bytes());
    for (f, n) in mesh.faces().iter().zip(mesh.face_normals()) {
        for c in n.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        for &vi in f {
            let v = mesh.vertices()[vi as usize];
            for c in v.iter() {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

pub fn parse_tpm(bytes: &[u8]) -> Result<RawMesh, MeshError> {
    if bytes.get(..4) != Some(TPM_MAGIC.as_slice()) {
        return Err(MeshError::Binary("missing TPM1 magic".into()));
    }
    let nv = read_u32(bytes, 4).ok_or_else(|| MeshError::Binary("truncated header".into()))? as usize;
    let nf = read_u32(bytes, 8).ok_or_else(|| MeshError::Binary("truncated header".into()))? as usize;
    let needed = 12 + nv * 12 + nf * 12;
    if bytes.len() != needed {
        return Err(MeshError::Binary(format!(
            "expected {needed} bytes for {nv} vertices and {nf} faces, found {}",
            bytes.len()
        )));
    }
    let vertices = (0..nv)
        .map(|i| {
            let at = 12 + i * 12;
            let c = [0, 1, 2].map(|j| read_f32(bytes, at + 4 * j).unwrap() as f64);
            Point::new(c[0], c[1], c[2])
        })
        .collect();
    let fbase = 12 + nv * 12;
    let faces = (0..nf)
        .map(|i| [0, 1, 2].map(|j| read_u32(bytes, fbase + i * 12 + 4 * j).unwrap()))
        .collect();
    Ok((vertices, faces))
}

pub fn write_tpm(mesh: &TriMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + mesh.vertices().len() * 12 + mesh.faces().len() * 12);
    out.extend_from_slice(TPM_MAGIC);
    out.extend_from_slice(&(mesh.vertices().len() as u32).to_le_bytes());
    out.extend_from_slice(&(mesh.faces().len() as u32).to_le_bytes());
    for v in mesh.vertices() {
        for c in v.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
    }
    for f in mesh.faces() {
        for i in f {
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    out
}
