//! Sharp-edge extraction, greedy polyline concatenation and the capsule grid
//! used for foot penetration queries.
//!
//! The full chain is [`detect`]: adjacency → dihedral filter → concatenation
//! → [`CylinderGrid`]. Each stage is also exposed on its own.

mod concat;
pub(crate) mod grid;
pub mod io;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::mesh::{compute_adjacency, FaceAdjacency, TriMesh};

pub use concat::process_edges;
pub use grid::{Capsule, CylinderGrid, Penetration};

#[derive(Debug, Error, PartialEq)]
pub enum EdgeError {
    #[error("sharpness threshold must lie in (0, π), got {0}")]
    Threshold(f64),
    #[error("cylinder radius must be positive, got {0}")]
    Radius(f64),
    #[error("grid resolution must be at least 1")]
    GridResolution,
    #[error("concat angle threshold must lie in (0, π/2], got {0}")]
    ConcatAngle(f64),
    #[error("concat min points must be at least 2, got {0}")]
    MinPoints(usize),
    #[error("concat tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("edge segment endpoints coincide")]
    DegenerateSegment,
    #[error("cannot build a collision grid from an empty edge set")]
    NoEdges,
    #[error("malformed edge file: {0}")]
    Format(String),
}

/// Parameters of the greedy concatenation pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConcatConfig {
    /// Maximum turn between consecutive segments merged into one polyline (rad).
    pub angle_thresh: f64,
    /// Polylines with fewer points are passed through unmerged.
    pub min_points: usize,
    /// Chord distance tolerance for simplification (m).
    pub tolerance: f64,
}

impl Default for ConcatConfig {
    fn default() -> Self {
        Self {
            angle_thresh: 15f64.to_radians(),
            min_points: 3,
            tolerance: 0.01,
        }
    }
}

impl ConcatConfig {
    pub fn validate(&self) -> Result<(), EdgeError> {
        if !(self.angle_thresh > 0.0 && self.angle_thresh <= std::f64::consts::FRAC_PI_2) {
            return Err(EdgeError::ConcatAngle(self.angle_thresh));
        }
        if self.min_points < 2 {
            return Err(EdgeError::MinPoints(self.min_points));
        }
        if !(self.tolerance > 0.0) {
            return Err(EdgeError::Tolerance(self.tolerance));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdgeDetectConfig {
    /// Dihedral angle above which an edge is sharp (rad).
    pub sharpness_threshold: f64,
    /// Capsule radius around each edge (m).
    pub cylinder_radius: f64,
    /// Grid cells per axis.
    pub grid_resolution: usize,
    pub concat: ConcatConfig,
}

impl Default for EdgeDetectConfig {
    fn default() -> Self {
        Self {
            sharpness_threshold: 30f64.to_radians(),
            cylinder_radius: 0.04,
            grid_resolution: 64,
            concat: ConcatConfig::default(),
        }
    }
}

impl EdgeDetectConfig {
    pub fn with_threshold_degrees(mut self, degrees: f64) -> Self {
        self.sharpness_threshold = degrees.to_radians();
        self
    }

    pub fn validate(&self) -> Result<(), EdgeError> {
        if !(self.sharpness_threshold > 0.0 && self.sharpness_threshold < std::f64::consts::PI) {
            return Err(EdgeError::Threshold(self.sharpness_threshold));
        }
        if !(self.cylinder_radius > 0.0 && self.cylinder_radius.is_finite()) {
            return Err(EdgeError::Radius(self.cylinder_radius));
        }
        if self.grid_resolution == 0 {
            return Err(EdgeError::GridResolution);
        }
        self.concat.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSegment {
    pub a: Point,
    pub b: Point,
}

impl EdgeSegment {
    pub fn new(a: Point, b: Point) -> Result<Self, EdgeError> {
        if (a - b).norm() <= 1e-9 {
            return Err(EdgeError::DegenerateSegment);
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn midpoint(&self) -> Point {
        nalgebra::center(&self.a, &self.b)
    }

    pub fn distance_to(&self, p: &Point) -> f64 {
        crate::geometry::point_segment_distance(p, &self.a, &self.b)
    }
}

/// Raw sharp edges and their concatenated form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeSet {
    pub raw: Vec<EdgeSegment>,
    pub merged: Vec<EdgeSegment>,
}

impl EdgeSet {
    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// `raw / merged`, or 1 when nothing was found.
    pub fn reduction_ratio(&self) -> f64 {
        if self.merged.is_empty() {
            1.0
        } else {
            self.raw.len() as f64 / self.merged.len() as f64
        }
    }
}

/// Shared vertex pairs of every adjacency whose dihedral exceeds `tau`,
/// deduplicated and sorted.
pub fn sharp_edge_indices(adjacency: &FaceAdjacency, tau: f64) -> Vec<(u32, u32)> {
    let mut seen = HashSet::new();
    let mut out: Vec<(u32, u32)> = adjacency
        .pairs
        .iter()
        .filter(|a| a.dihedral > tau)
        .map(|a| (a.edge.0.min(a.edge.1), a.edge.0.max(a.edge.1)))
        .filter(|e| seen.insert(*e))
        .collect();
    out.sort_unstable();
    out
}

pub fn detect_sharp_edges(mesh: &TriMesh, adjacency: &FaceAdjacency, tau: f64) -> Vec<EdgeSegment> {
    let v = mesh.vertices();
    sharp_edge_indices(adjacency, tau)
        .into_iter()
        .map(|(i, j)| EdgeSegment {
            a: v[i as usize],
            b: v[j as usize],
        })
        .collect()
}

/// Output of the full detection chain.
#[derive(Debug, Clone)]
pub struct DetectedEdges {
    pub edges: EdgeSet,
    /// `None` when no sharp edge exists.
    pub grid: Option<CylinderGrid>,
}

/// Detect, concatenate and bin the sharp edges of `mesh`.
pub fn detect(mesh: &TriMesh, cfg: &EdgeDetectConfig) -> Result<DetectedEdges, EdgeError> {
    cfg.validate()?;
    let adjacency = compute_adjacency(mesh);
    let raw = detect_sharp_edges(mesh, &adjacency, cfg.sharpness_threshold);
    if raw.is_empty() {
        return Ok(DetectedEdges {
            edges: EdgeSet::default(),
            grid: None,
        });
    }
    let merged = process_edges(&raw, &cfg.concat);
    let grid = CylinderGrid::build(&merged, cfg.cylinder_radius, cfg.grid_resolution)?;
    Ok(DetectedEdges {
        edges: EdgeSet { raw, merged },
        grid: Some(grid),
    })
}

pub fn build_collision_grid(edges: &[EdgeSegment], radius: f64, grid_resolution: usize) -> Result<CylinderGrid, EdgeError> {
    CylinderGrid::build(edges, radius, grid_resolution)
}
