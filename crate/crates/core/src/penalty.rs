//! Foot volume points, edge penetration penalty and landing-area metric.

use nalgebra::{Quaternion, UnitQuaternion};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edges::CylinderGrid;
use crate::geometry::{Point, Vector};
use crate::render::Scene;

/// Stability constant added to every point speed.
pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_SUPPORT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum PenaltyError {
    #[error("{offsets} offsets but {velocities} velocities")]
    LengthMismatch { offsets: usize, velocities: usize },
    #[error("orientation is not a unit quaternion (norm {0})")]
    Orientation(f64),
    #[error("invalid volume point set: {0}")]
    PointSet(String),
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("non-finite foot state")]
    NonFinite,
}

/// Probe points inside the foot box, in the foot frame. The box spans
/// `x ∈ ±length/2`, `y ∈ ±width/2` and `z ∈ [0, height]`, so the sole is the
/// `z = 0` face.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumePointSet {
    points: Vec<Vector>,
    /// `(length, width, height)` in meters.
    size: [f64; 3],
}

impl VolumePointSet {
    pub fn new(points: Vec<Vector>, size: [f64; 3]) -> Result<Self, PenaltyError> {
        if size.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(PenaltyError::PointSet(format!("foot box {size:?} must be positive")));
        }
        if points.len() < 4 {
            return Err(PenaltyError::PointSet(format!("need at least 4 points, got {}", points.len())));
        }
        let tol = 1e-12;
        let inside = |p: &Vector| {
            p.x.abs() <= 0.5 * size[0] + tol && p.y.abs() <= 0.5 * size[1] + tol && p.z >= -tol && p.z <= size[2] + tol
        };
        if let Some(p) = points.iter().find(|p| !inside(p)) {
            return Err(PenaltyError::PointSet(format!("point {:?} lies outside the foot box", p.as_slice())));
        }
        Ok(Self { points, size })
    }

    /// Cell-centered `nx × ny × nz` lattice filling the foot box.
    pub fn grid(size: [f64; 3], n: [usize; 3]) -> Result<Self, PenaltyError> {
        let mut points = Vec::with_capacity(n[0] * n[1] * n[2]);
        let c = |i: usize, k: usize, len: f64| (i as f64 + 0.5) / k as f64 * len;
        for iz in 0..n[2] {
            for iy in 0..n[1] {
                for ix in 0..n[0] {
                    points.push(Vector::new(
                        c(ix, n[0], size[0]) - 0.5 * size[0],
                        c(iy, n[1], size[1]) - 0.5 * size[1],
                        c(iz, n[2], size[2]),
                    ));
                }
            }
        }
        Self::new(points, size)
    }

    /// 5 × 3 × 2 lattice in a 0.22 × 0.08 × 0.04 m foot box.
    pub fn default_foot() -> Self {
        Self::grid([0.22, 0.08, 0.04], [5, 3, 2]).expect("default foot is valid")
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn size(&self) -> [f64; 3] {
        self.size
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Foot pose and twist, all in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootState {
    pub position: Point,
    pub orientation: UnitQuaternion<f64>,
    pub linear_velocity: Vector,
    pub angular_velocity: Vector,
}

impl FootState {
    pub fn at_rest(position: Point, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
            linear_velocity: Vector::zeros(),
            angular_velocity: Vector::zeros(),
        }
    }

    /// `pose = [x, y, z, qw, qx, qy, qz]`, `twist = [vx, vy, vz, wx, wy, wz]`.
    /// The quaternion must have unit norm within 1e-6.
    pub fn from_arrays(pose: &[f64; 7], twist: &[f64; 6]) -> Result<Self, PenaltyError> {
        if pose.iter().chain(twist).any(|v| !v.is_finite()) {
            return Err(PenaltyError::NonFinite);
        }
        let q = Quaternion::new(pose[3], pose[4], pose[5], pose[6]);
        let norm = q.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(PenaltyError::Orientation(norm));
        }
        Ok(Self {
            position: Point::new(pose[0], pose[1], pose[2]),
            orientation: UnitQuaternion::from_quaternion(q),
            linear_velocity: Vector::new(twist[0], twist[1], twist[2]),
            angular_velocity: Vector::new(twist[3], twist[4], twist[5]),
        })
    }

    pub fn world_point(&self, offset: &Vector) -> Point {
        self.position + self.orientation * offset
    }

    /// Rigid-body velocity of a point at `offset` in the foot frame.
    pub fn point_velocity(&self, offset: &Vector) -> Vector {
        self.linear_velocity + self.angular_velocity.cross(&(self.orientation * offset))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    pub epsilon: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<(), PenaltyError> {
        if self.epsilon > 0.0 && self.epsilon.is_finite() {
            Ok(())
        } else {
            Err(PenaltyError::Epsilon(self.epsilon))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyResult {
    /// `(d_i, v_i)` per volume point.
    pub per_point: Vec<(Vector, Vector)>,
    pub r_vol: f64,
}

/// World-frame penetration offset of every volume point, per state.
pub fn query_penetrations(grid: &CylinderGrid, states: &[FootState], pts: &VolumePointSet) -> Vec<Vec<Vector>> {
    states
        .par_iter()
        .map(|s| {
            pts.points
                .iter()
                .map(|o| grid.query(&s.world_point(o)).offset)
                .collect()
        })
        .collect()
}

pub fn point_velocities(state: &FootState, pts: &VolumePointSet) -> Vec<Vector> {
    pts.points.iter().map(|o| state.point_velocity(o)).collect()
}

/// `-Σ ‖d_i‖ · (‖v_i‖ + ε)`.
pub fn rvol_penalty(offsets: &[Vector], velocities: &[Vector], cfg: &PenaltyConfig) -> Result<f64, PenaltyError> {
    if offsets.len() != velocities.len() {
        return Err(PenaltyError::LengthMismatch {
            offsets: offsets.len(),
            velocities: velocities.len(),
        });
    }
    let sum: f64 = offsets
        .iter()
        .zip(velocities)
        .map(|(d, v)| d.norm() * (v.norm() + cfg.epsilon))
        .sum();
    Ok(-sum)
}

/// Penalty for one foot; a missing grid (terrain without sharp edges) yields
/// zero offsets.
pub fn evaluate(grid: Option<&CylinderGrid>, state: &FootState, pts: &VolumePointSet, cfg: &PenaltyConfig) -> PenaltyResult {
    let per_point: Vec<(Vector, Vector)> = pts
        .points
        .iter()
        .map(|o| {
            let d = grid.map_or(Vector::zeros(), |g| g.query(&state.world_point(o)).offset);
            (d, state.point_velocity(o))
        })
        .collect();
    let r_vol = -per_point
        .iter()
        .map(|(d, v)| d.norm() * (v.norm() + cfg.epsilon))
        .sum::<f64>();
    PenaltyResult { per_point, r_vol }
}

pub fn evaluate_batch(
    grid: Option<&CylinderGrid>,
    states: &[FootState],
    pts: &VolumePointSet,
    cfg: &PenaltyConfig,
) -> Vec<PenaltyResult> {
    states.par_iter().map(|s| evaluate(grid, s, pts, cfg)).collect()
}

/// Fraction of volume points with terrain under their sole projection.
///
/// Each point is dropped along the foot's `-z` axis onto the sole plane; the
/// point counts as supported when the topmost surface below that sole point
/// lies within `support_tolerance` of it (above or below).
pub fn landing_area(scene: &Scene, state: &FootState, pts: &VolumePointSet, support_tolerance: f64) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    let up = state.orientation * Vector::z();
    let supported = pts
        .points
        .iter()
        .filter(|o| {
            let sole = state.world_point(o) - up * o.z;
            let origin = sole + Vector::z() * support_tolerance;
            scene
                .cast(&origin, &-Vector::z(), 0.0)
                .is_some_and(|h| h.distance <= 2.0 * support_tolerance)
        })
        .count();
    supported as f64 / pts.len() as f64
}
