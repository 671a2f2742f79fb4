//! Pinhole depth rendering by ray casting against a triangle scene.
//!
//! Radial distance is the ray parameter of the first hit along the unit
//! pixel ray; orthogonal depth is that distance projected on the principal
//! axis, which is what RGB-D sensors report.

mod bvh;
pub mod io;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ray_triangle, Aabb, Point, Vector};
use crate::mesh::TriMesh;

pub use bvh::{Bvh, Hit};

/// Minimum accepted hit distance (m); keeps rays from hitting their origin.
pub const RAY_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("camera must be at least 1×1 pixels")]
    EmptyImage,
    #[error("camera intrinsics must be finite and positive")]
    Intrinsics,
    #[error("image is {got_w}×{got_h} but the camera is {want_w}×{want_h}")]
    ShapeMismatch {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("invalid camera spec: {0}")]
    Spec(String),
}

/// Triangle soup with a BVH, shared read-only by all queries.
#[derive(Debug, Clone)]
pub struct Scene {
    triangles: Vec<[Point; 3]>,
    bvh: Bvh,
    bounds: Aabb,
}

impl Scene {
    pub fn new(meshes: &[&TriMesh]) -> Self {
        let triangles: Vec<[Point; 3]> = meshes.iter().flat_map(|m| m.triangles()).collect();
        Self::from_triangles(triangles)
    }

    pub fn from_mesh(mesh: &TriMesh) -> Self {
        Self::new(&[mesh])
    }

    pub fn from_triangles(triangles: Vec<[Point; 3]>) -> Self {
        let bvh = Bvh::build(&triangles);
        let bounds = Aabb::from_points(triangles.iter().flatten());
        Self { triangles, bvh, bounds }
    }

    pub fn triangles(&self) -> &[[Point; 3]] {
        &self.triangles
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    /// Nearest hit beyond `t_min` along `dir` (which need not be unit; the
    /// returned distance is the ray parameter).
    pub fn cast(&self, origin: &Point, dir: &Vector, t_min: f64) -> Option<Hit> {
        self.bvh.intersect(&self.triangles, origin, dir, t_min, f64::INFINITY)
    }

    /// Same contract as [`Scene::cast`] by testing every triangle.
    pub fn cast_exhaustive(&self, origin: &Point, dir: &Vector, t_min: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (i, tri) in self.triangles.iter().enumerate() {
            if let Some(t) = ray_triangle(origin, dir, tri, t_min) {
                if best.is_none_or(|b| t < b.distance) {
                    best = Some(Hit {
                        distance: t,
                        triangle: i as u32,
                    });
                }
            }
        }
        best
    }

    /// Indices of triangles that may overlap the planar rectangle
    /// `[min, max]`. Conservative: every overlapping triangle is included.
    pub fn triangles_in_xy(&self, min: [f64; 2], max: [f64; 2]) -> Vec<u32> {
        self.bvh.overlapping_xy(min, max)
    }

    /// Height of the topmost surface under `(x, y)`.
    pub fn height_at(&self, x: f64, y: f64) -> Option<f64> {
        if self.triangles.is_empty() {
            return None;
        }
        let top = self.bounds.max.z + 1.0;
        self.cast(&Point::new(x, y, top), &-Vector::z(), 0.0)
            .map(|h| top - h.distance)
    }
}

/// Pinhole camera. The camera frame is optical: x right, y down, z forward;
/// `orientation` maps camera-frame vectors into the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub position: Point,
    pub orientation: UnitQuaternion<f64>,
}

impl CameraModel {
    /// Square pixels with the principal point at the image center.
    pub fn from_fov(width: usize, height: usize, hfov: f64, position: Point, orientation: UnitQuaternion<f64>) -> Self {
        let fx = 0.5 * width as f64 / (0.5 * hfov).tan();
        Self {
            width,
            height,
            fx,
            fy: fx,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            position,
            orientation,
        }
    }

    /// Orientation whose principal axis points from `eye` to `target`, with
    /// image "up" as close to `up` as possible.
    pub fn look_at_orientation(eye: &Point, target: &Point, up: &Vector) -> UnitQuaternion<f64> {
        let forward = (target - eye).normalize();
        let mut right = forward.cross(up);
        if right.norm() < 1e-9 {
            right = forward.cross(&Vector::x());
            if right.norm() < 1e-9 {
                right = forward.cross(&Vector::y());
            }
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let m = Matrix3::from_columns(&[right, down, forward]);
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::EmptyImage);
        }
        let ok = |v: f64| v.is_finite();
        if !(ok(self.fx) && ok(self.fy) && self.fx > 0.0 && self.fy > 0.0 && ok(self.cx) && ok(self.cy)) {
            return Err(RenderError::Intrinsics);
        }
        Ok(())
    }

    /// Principal axis `n_c` in world coordinates.
    pub fn principal_axis(&self) -> Vector {
        self.orientation * Vector::z()
    }

    /// World ray through the center of pixel (`col`, `row`).
    pub fn ray(&self, col: usize, row: usize) -> Vector {
        let d = Vector::new(
            (col as f64 + 0.5 - self.cx) / self.fx,
            (row as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        );
        (self.orientation * d).normalize()
    }

    /// Unit ray for every pixel, row-major.
    pub fn ray_directions(&self) -> Vec<Vector> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| (c, r)))
            .map(|(c, r)| self.ray(c, r))
            .collect()
    }

    pub fn translated(&self, by: &Vector) -> Self {
        Self {
            position: self.position + by,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthUnit {
    #[serde(rename = "m")]
    Meters,
    Normalized,
}

/// Row-major depth grid with per-pixel validity.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
    pub unit: DepthUnit,
}

impl DepthImage {
    pub fn filled(width: usize, height: usize, value: f64, unit: DepthUnit) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
            valid: vec![true; width * height],
            unit,
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>, unit: DepthUnit) -> Self {
        assert_eq!(values.len(), width * height, "pixel count mismatch");
        Self {
            width,
            height,
            valid: vec![true; values.len()],
            values,
            unit,
        }
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[self.index(col, row)]
    }

    pub fn is_valid(&self, col: usize, row: usize) -> bool {
        self.valid[self.index(col, row)]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub min_distance: f64,
    /// Value stored in pixels whose ray misses everything (m).
    pub miss_value: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            min_distance: RAY_EPSILON,
            miss_value: 10.0,
        }
    }
}

/// Radial distance along every pixel ray; misses are invalid and carry
/// `cfg.miss_value`.
pub fn raycast_radial(scene: &Scene, cam: &CameraModel, cfg: &RenderConfig) -> Result<DepthImage, RenderError> {
    cam.validate()?;
    let (w, h) = (cam.width, cam.height);
    let mut values = vec![cfg.miss_value; w * h];
    let mut valid = vec![false; w * h];
    values
        .par_chunks_mut(w)
        .zip(valid.par_chunks_mut(w))
        .enumerate()
        .for_each(|(row, (vals, oks))| {
            for col in 0..w {
                let dir = cam.ray(col, row);
                if let Some(hit) = scene.cast(&cam.position, &dir, cfg.min_distance) {
                    vals[col] = hit.distance;
                    oks[col] = true;
                }
            }
        });
    Ok(DepthImage {
        width: w,
        height: h,
        values,
        valid,
        unit: DepthUnit::Meters,
    })
}

/// `z = d · (v · n_c)` per valid pixel; invalid pixels are copied through.
pub fn radial_to_orthogonal(radial: &DepthImage, cam: &CameraModel) -> Result<DepthImage, RenderError> {
    if radial.width != cam.width || radial.height != cam.height {
        return Err(RenderError::ShapeMismatch {
            got_w: radial.width,
            got_h: radial.height,
            want_w: cam.width,
            want_h: cam.height,
        });
    }
    let n = cam.principal_axis();
    let mut out = radial.clone();
    for row in 0..cam.height {
        for col in 0..cam.width {
            let i = radial.index(col, row);
            if radial.valid[i] {
                out.values[i] = radial.values[i] * cam.ray(col, row).dot(&n);
            }
        }
    }
    Ok(out)
}

/// Orthogonal metric depth image.
pub fn render_depth(scene: &Scene, cam: &CameraModel, cfg: &RenderConfig) -> Result<DepthImage, RenderError> {
    radial_to_orthogonal(&raycast_radial(scene, cam, cfg)?, cam)
}

/// Renders several cameras; each image is identical to a single render.
pub fn render_batch(scene: &Scene, cams: &[CameraModel], cfg: &RenderConfig) -> Result<Vec<DepthImage>, RenderError> {
    cams.par_iter().map(|c| render_depth(scene, c, cfg)).collect()
}

/// Camera description used by the CLI and config files. Angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view (degrees); ignored when `fx` is given.
    #[serde(default)]
    pub hfov_deg: Option<f64>,
    #[serde(default)]
    pub fx: Option<f64>,
    #[serde(default)]
    pub fy: Option<f64>,
    #[serde(default)]
    pub cx: Option<f64>,
    #[serde(default)]
    pub cy: Option<f64>,
    /// Optical center in world coordinates (m).
    pub position: [f64; 3],
    /// Camera-to-world rotation as a `[w, x, y, z]` quaternion (optical frame).
    #[serde(default)]
    pub orientation_wxyz: Option<[f64; 4]>,
    /// Alternative to `orientation_wxyz`: world point the principal axis aims at.
    #[serde(default)]
    pub look_at: Option<[f64; 3]>,
}

impl CameraSpec {
    pub fn to_camera(&self) -> Result<CameraModel, RenderError> {
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::EmptyImage);
        }
        let position = Point::from(self.position);
        let orientation = match (self.orientation_wxyz, self.look_at) {
            (Some(q), None) => {
                let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
                if !(quat.norm() > 0.0 && quat.norm().is_finite()) {
                    return Err(RenderError::Spec("orientation quaternion must be non-zero".into()));
                }
                UnitQuaternion::from_quaternion(quat)
            }
            (None, Some(t)) => {
                let target = Point::from(t);
                if (target - position).norm() == 0.0 {
                    return Err(RenderError::Spec("look_at target coincides with position".into()));
                }
                CameraModel::look_at_orientation(&position, &target, &Vector::z())
            }
            (None, None) => return Err(RenderError::Spec("one of orientation_wxyz or look_at is required".into())),
            (Some(_), Some(_)) => return Err(RenderError::Spec("give orientation_wxyz or look_at, not both".into())),
        };
        let mut cam = match (self.fx, self.hfov_deg) {
            (Some(fx), _) => CameraModel {
                width: self.width,
                height: self.height,
                fx,
                fy: self.fy.unwrap_or(fx),
                cx: 0.5 * self.width as f64,
                cy: 0.5 * self.height as f64,
                position,
                orientation,
            },
            (None, Some(h)) if h > 0.0 && h < 180.0 => {
                CameraModel::from_fov(self.width, self.height, h.to_radians(), position, orientation)
            }
            (None, Some(h)) => return Err(RenderError::Spec(format!("hfov_deg {h} outside (0, 180)"))),
            (None, None) => return Err(RenderError::Spec("one of fx or hfov_deg is required".into())),
        };
        if let Some(cx) = self.cx {
            cam.cx = cx;
        }
        if let Some(cy) = self.cy {
            cam.cy = cy;
        }
        cam.validate()?;
        Ok(cam)
    }
}
