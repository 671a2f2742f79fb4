//! Indexed triangle meshes, face adjacency and procedural test terrains.

mod adjacency;
pub mod io;
pub mod terrain;
mod weld;

use std::collections::HashSet;

use thiserror::Error;

use crate::geometry::{Aabb, Point, Vector};

pub use adjacency::{compute_adjacency, Adjacency, FaceAdjacency};
pub use io::{load_mesh, save_mesh, MeshFormat};
pub use terrain::{generate_terrain, TerrainKind, TerrainSpec};
pub use weld::weld_vertices;

/// Triangles with area at or below this are dropped during validation (m²).
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Default tolerance for merging duplicated vertices (m).
pub const DEFAULT_WELD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no faces")]
    Empty,
    #[error("face {face} vertex index {index} out of range (vertex count {count})")]
    IndexOutOfRange { face: usize, index: u32, count: usize },
    #[error("all {0} faces are degenerate")]
    AllDegenerate(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed binary mesh: {0}")]
    Binary(String),
    #[error("invalid terrain spec: {0}")]
    InvalidTerrain(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A validated triangle mesh with per-face unit normals.
///
/// Immutable once built; validation rejects out-of-range indices and drops
/// faces whose area is at most [`DEGENERATE_AREA`].
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    faces: Vec<[u32; 3]>,
    normals: Vec<Vector>,
    dropped_faces: usize,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        if let Some(i) = vertices
            .iter()
            .position(|v| !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()))
        {
            return Err(MeshError::NonFinite(i));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i as usize >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange {
                    face: fi,
                    index: bad,
                    count: vertices.len(),
                });
            }
        }
        let total = faces.len();
        let mut kept = Vec::with_capacity(total);
        let mut normals = Vec::with_capacity(total);
        for f in faces {
            let [a, b, c] = f.map(|i| vertices[i as usize]);
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] || area <= DEGENERATE_AREA {
                continue;
            }
            kept.push(f);
            normals.push(cross.normalize());
        }
        if kept.is_empty() {
            return Err(MeshError::AllDegenerate(total));
        }
        Ok(Self {
            vertices,
            dropped_faces: total - kept.len(),
            faces: kept,
            normals,
        })
    }

    /// Welds vertices closer than `tolerance` and then validates.
    pub fn new_welded(vertices: Vec<Point>, faces: Vec<[u32; 3]>, tolerance: f64) -> Result<Self, MeshError> {
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i as usize >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange {
                    face: fi,
                    index: bad,
                    count: vertices.len(),
                });
            }
        }
        let (welded, remap) = weld_vertices(&vertices, tolerance);
        let faces = faces.into_iter().map(|f| f.map(|i| remap[i as usize])).collect();
        Self::new(welded, faces)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_normals(&self) -> &[Vector] {
        &self.normals
    }

    /// Faces removed as degenerate during validation.
    pub fn dropped_faces(&self) -> usize {
        self.dropped_faces
    }

    pub fn triangle(&self, face: usize) -> [Point; 3] {
        self.faces[face].map(|i| self.vertices[i as usize])
    }

    pub fn triangles(&self) -> impl Iterator<Item = [Point; 3]> + '_ {
        (0..self.faces.len()).map(|f| self.triangle(f))
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        let mut edges = HashSet::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len()
    }

    /// Applies a rigid transform to every vertex.
    pub fn transformed(&self, iso: &nalgebra::Isometry3<f64>) -> TriMesh {
        let vertices = self.vertices.iter().map(|p| iso * p).collect();
        TriMesh::new(vertices, self.faces.clone()).expect("rigid transform preserves validity")
    }

    /// Concatenates meshes into one index space.
    pub fn merge(meshes: &[TriMesh]) -> Result<TriMesh, MeshError> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for m in meshes {
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            faces.extend(m.faces.iter().map(|f| f.map(|i| i + base)));
        }
        TriMesh::new(vertices, faces)
    }
}
