//! Flat-array batch interface for host training loops.
//!
//! A [`Session`] owns one immutable terrain snapshot: mesh, BVH scene,
//! detected edges with their capsule grid, and a set of flat patches. Every
//! batch call takes and returns C-contiguous little-endian `f32` buffers:
//!
//! | buffer        | shape       | row layout                              |
//! |---------------|-------------|-----------------------------------------|
//! | poses         | `N × 7`     | `x, y, z, qw, qx, qy, qz`               |
//! | twists        | `N × 6`     | `vx, vy, vz, wx, wy, wz` (world frame)  |
//! | r_vol         | `N`         | penalty per foot                        |
//! | offsets       | `N × P × 3` | penetration offset per volume point     |
//! | depth         | `N × H × W` | normalized depth, row-major             |
//! | commands      | `N × 3`     | `v_x, v_y, ω_z`                         |
//!
//! Results are computed in `f64` and rounded to `f32` once at the boundary.

use rayon::prelude::*;
use thiserror::Error;

use crate::command::{
    assign_commands, check_patch, sample_flat_patches, Agent, CommandConfig, CommandError, FlatPatch, PatchConfig, SampleBounds,
};
use crate::edges::{detect, CylinderGrid, EdgeDetectConfig, EdgeError, EdgeSet};
use crate::geometry::Point;
use crate::mesh::{MeshError, TriMesh, DEFAULT_WELD_TOLERANCE};
use crate::penalty::{evaluate, FootState, PenaltyConfig, PenaltyError, VolumePointSet};
use crate::pipeline::{fsim_apply_seeded, PipelineError, SimPipelineConfig};
use crate::render::{render_depth, CameraModel, RenderConfig, RenderError, Scene};

/// Version of the batch array contract.
pub const ABI_VERSION: &str = "tperc-abi-1.0";

pub fn abi_version() -> &'static str {
    ABI_VERSION
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Edge(#[from] EdgeError),
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{what}: {detail}")]
    Shape { what: &'static str, detail: String },
}

fn check_shape(what: &'static str, got: usize, row: usize, rows: Option<usize>) -> Result<usize, SessionError> {
    match rows {
        Some(n) if got != n * row => Err(SessionError::Shape {
            what,
            detail: format!("expected {n} rows of {row} values ({}), got {got}", n * row),
        }),
        None if !got.is_multiple_of(row) => Err(SessionError::Shape {
            what,
            detail: format!("length {got} is not a multiple of {row}"),
        }),
        _ => Ok(got / row),
    }
}

fn pose_row(buf: &[f32], i: usize) -> [f64; 7] {
    std::array::from_fn(|k| buf[i * 7 + k] as f64)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionConfig {
    pub edges: EdgeDetectConfig,
    pub patches: PatchConfig,
    pub penalty: PenaltyConfig,
    pub render: RenderConfig,
}

/// Immutable terrain snapshot shared by all batch queries. `Session` is
/// `Send + Sync`; concurrent read-only calls are safe.
pub struct Session {
    mesh: TriMesh,
    scene: Scene,
    edges: EdgeSet,
    grid: Option<CylinderGrid>,
    patches: Vec<FlatPatch>,
    foot: VolumePointSet,
    cfg: SessionConfig,
}

impl Session {
    pub fn create(mesh: TriMesh, cfg: SessionConfig, foot: VolumePointSet) -> Result<Self, SessionError> {
        cfg.penalty.validate()?;
        let detected = detect(&mesh, &cfg.edges)?;
        let scene = Scene::from_mesh(&mesh);
        let bounds = SampleBounds::inside(&scene, &cfg.patches);
        let patches = sample_flat_patches(&scene, &cfg.patches, &bounds)?;
        Ok(Self {
            mesh,
            scene,
            edges: detected.edges,
            grid: detected.grid,
            patches,
            foot,
            cfg,
        })
    }

    /// Builds from `V × 3` vertex and `F × 3` index arrays; coincident
    /// vertices are welded.
    pub fn from_arrays(vertices: &[f32], faces: &[u32], cfg: SessionConfig, foot: VolumePointSet) -> Result<Self, SessionError> {
        check_shape("vertices", vertices.len(), 3, None)?;
        check_shape("faces", faces.len(), 3, None)?;
        let v: Vec<Point> = vertices
            .chunks_exact(3)
            .map(|c| Point::new(c[0] as f64, c[1] as f64, c[2] as f64))
            .collect();
        let f: Vec<[u32; 3]> = faces.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::create(TriMesh::new_welded(v, f, DEFAULT_WELD_TOLERANCE)?, cfg, foot)
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn edges(&self) -> &EdgeSet {
        &self.edges
    }

    pub fn grid(&self) -> Option<&CylinderGrid> {
        self.grid.as_ref()
    }

    pub fn patches(&self) -> &[FlatPatch] {
        &self.patches
    }

    pub fn foot(&self) -> &VolumePointSet {
        &self.foot
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    /// Returns `(r_vol [N], offsets [N × P × 3])`.
    pub fn batch_penetration(&self, poses: &[f32], twists: &[f32]) -> Result<(Vec<f32>, Vec<f32>), SessionError> {
        let n = check_shape("poses", poses.len(), 7, None)?;
        check_shape("twists", twists.len(), 6, Some(n))?;
        let states: Vec<FootState> = (0..n)
            .map(|i| {
                let twist: [f64; 6] = std::array::from_fn(|k| twists[i * 6 + k] as f64);
                FootState::from_arrays(&pose_row(poses, i), &twist)
            })
            .collect::<Result<_, _>>()?;
        let results: Vec<_> = states
            .par_iter()
            .map(|s| evaluate(self.grid.as_ref(), s, &self.foot, &self.cfg.penalty))
            .collect();
        let r_vol = results.iter().map(|r| r.r_vol as f32).collect();
        let offsets = results
            .iter()
            .flat_map(|r| r.per_point.iter().flat_map(|(d, _)| [d.x as f32, d.y as f32, d.z as f32]))
            .collect();
        Ok((r_vol, offsets))
    }

    /// Renders each camera pose with `camera`'s intrinsics and runs the
    /// simulated pipeline with the matching seed.
    pub fn batch_depth(&self, camera: &CameraModel, poses: &[f32], sim: &SimPipelineConfig, seeds: &[u64]) -> Result<Vec<f32>, SessionError> {
        let n = check_shape("camera poses", poses.len(), 7, Some(seeds.len()))?;
        let cams: Vec<CameraModel> = (0..n)
            .map(|i| {
                let p = pose_row(poses, i);
                let state = FootState::from_arrays(&p, &[0.0; 6])?;
                Ok(CameraModel {
                    position: state.position,
                    orientation: state.orientation,
                    ..*camera
                })
            })
            .collect::<Result<_, SessionError>>()?;
        let frames: Vec<Vec<f32>> = cams
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(cam, &seed)| {
                let depth = render_depth(&self.scene, cam, &self.cfg.render)?;
                let out = fsim_apply_seeded(&depth, sim, seed)?;
                Ok(out.values.iter().map(|&v| v as f32).collect())
            })
            .collect::<Result<_, SessionError>>()?;
        Ok(frames.concat())
    }

    /// Assigns a target and command to each base pose. Agents standing on
    /// a location that passes the session's flatness check may turn in place.
    pub fn batch_commands(&self, base_poses: &[f32], cfg: &CommandConfig, seed: u64) -> Result<Vec<f32>, SessionError> {
        let n = check_shape("base poses", base_poses.len(), 7, None)?;
        let pc = &self.cfg.patches;
        let agents: Vec<Agent> = (0..n)
            .map(|i| {
                let state = FootState::from_arrays(&pose_row(base_poses, i), &[0.0; 6])?;
                let on_flat = check_patch(
                    &self.scene,
                    state.position.x,
                    state.position.y,
                    pc.radius,
                    pc.max_height_diff,
                    &pc.pattern,
                )
                .is_some();
                Ok(Agent {
                    pose: nalgebra::Isometry3::from_parts(state.position.coords.into(), state.orientation),
                    on_flat,
                })
            })
            .collect::<Result<_, SessionError>>()?;
        let out = assign_commands(&agents, &self.patches, cfg, seed)?;
        Ok(out
            .iter()
            .flat_map(|a| [a.command.v_x as f32, a.command.v_y as f32, a.command.omega_z as f32])
            .collect())
    }
}
