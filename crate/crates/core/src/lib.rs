//! Terrain perception and foothold-safety toolkit for legged robots.
//!
//! The crate covers sharp-edge extraction from terrain meshes, capsule-grid
//! penetration queries for foot volume points, ray-cast depth rendering with
//! sim/real alignment pipelines, and flat-patch navigation targets.
//!
//! ```
//! use terrain_perception::{edges, mesh};
//!
//! let stairs = mesh::generate_terrain(&mesh::TerrainSpec::stairs(3, 0.15, 0.3)).unwrap();
//! let found = edges::detect(&stairs, &edges::EdgeDetectConfig::default()).unwrap();
//! assert!(found.grid.is_some());
//! ```

// Negated float comparisons are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod command;
pub mod edges;
pub mod geometry;
pub mod mesh;
pub mod oracle;
pub mod penalty;
pub mod pipeline;
pub mod render;

pub use batch::{Session, SessionConfig, ABI_VERSION};
pub use command::{CommandConfig, FlatPatch, PatchConfig, VelocityCommand};
pub use edges::{CylinderGrid, EdgeDetectConfig, EdgeSegment};
pub use geometry::{Point, Vector};
pub use mesh::{TerrainSpec, TriMesh};
pub use penalty::{FootState, PenaltyConfig, VolumePointSet};
pub use pipeline::{DepthHistory, HistoryConfig, RealPipelineConfig, SimPipelineConfig};
pub use render::{CameraModel, DepthImage, Scene};
