//! Procedural terrains in a z-up, x-forward world frame.
//!
//! Stairs, gaps and slopes are open surfaces extruded along y from an x–z
//! profile: every profile segment becomes one quad (two coplanar triangles),
//! so the only sharp interior edges are the profile corners. The box sits in
//! a ground plane that shares its bottom rim, and rough terrain is a random
//! heightfield.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MeshError, TriMesh};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainKind {
    Flat,
    Stairs,
    Gap,
    Box,
    Rough,
    Slope,
}

impl FromStr for TerrainKind {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "flat" => Self::Flat,
            "stairs" => Self::Stairs,
            "gap" => Self::Gap,
            "box" => Self::Box,
            "rough" => Self::Rough,
            "slope" => Self::Slope,
            other => return Err(MeshError::InvalidTerrain(format!("unsupported terrain kind {other:?}"))),
        })
    }
}

/// Terrain parameters; all lengths in meters, angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerrainSpec {
    Flat {
        size_x: f64,
        size_y: f64,
    },
    Stairs {
        steps: u32,
        rise: f64,
        run: f64,
        width: f64,
        /// Length of the ground before the first riser and of the top landing.
        landing: f64,
    },
    Gap {
        gap_width: f64,
        depth: f64,
        platform: f64,
        width: f64,
    },
    Box {
        height: f64,
        /// Box side length.
        size: f64,
        /// Ground plane side length.
        ground: f64,
    },
    Rough {
        size: f64,
        cells: u32,
        amplitude: f64,
        seed: u64,
    },
    Slope {
        angle: f64,
        /// Horizontal extent of the incline.
        length: f64,
        run_off: f64,
        width: f64,
    },
}

impl TerrainSpec {
    pub fn flat(size_x: f64, size_y: f64) -> Self {
        Self::Flat { size_x, size_y }
    }

    pub fn stairs(steps: u32, rise: f64, run: f64) -> Self {
        Self::Stairs {
            steps,
            rise,
            run,
            width: 2.0,
            landing: 1.0,
        }
    }

    pub fn gap(gap_width: f64) -> Self {
        Self::Gap {
            gap_width,
            depth: 1.0,
            platform: 2.0,
            width: 2.0,
        }
    }

    pub fn boxed(height: f64, size: f64) -> Self {
        Self::Box {
            height,
            size,
            ground: 4.0,
        }
    }

    pub fn rough(seed: u64) -> Self {
        Self::Rough {
            size: 4.0,
            cells: 40,
            amplitude: 0.05,
            seed,
        }
    }

    pub fn slope(angle: f64) -> Self {
        Self::Slope {
            angle,
            length: 2.0,
            run_off: 2.0,
            width: 2.0,
        }
    }

    pub fn kind(&self) -> TerrainKind {
        match self {
            Self::Flat { .. } => TerrainKind::Flat,
            Self::Stairs { .. } => TerrainKind::Stairs,
            Self::Gap { .. } => TerrainKind::Gap,
            Self::Box { .. } => TerrainKind::Box,
            Self::Rough { .. } => TerrainKind::Rough,
            Self::Slope { .. } => TerrainKind::Slope,
        }
    }

    /// Default parameters for a kind.
    pub fn default_for(kind: TerrainKind) -> Self {
        match kind {
            TerrainKind::Flat => Self::flat(4.0, 4.0),
            TerrainKind::Stairs => Self::stairs(5, 0.15, 0.30),
            TerrainKind::Gap => Self::gap(0.5),
            TerrainKind::Box => Self::boxed(0.3, 1.0),
            TerrainKind::Rough => Self::rough(0),
            TerrainKind::Slope => Self::slope(0.25),
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let bad = |what: &str| Err(MeshError::InvalidTerrain(format!("{what} must be strictly positive")));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Self::Flat { size_x, size_y } => {
                if !(pos(size_x) && pos(size_y)) {
                    return bad("flat size");
                }
            }
            Self::Stairs {
                steps,
                rise,
                run,
                width,
                landing,
            } => {
                if steps == 0 || !(pos(rise) && pos(run) && pos(width) && pos(landing)) {
                    return bad("stairs dimensions");
                }
            }
            Self::Gap {
                gap_width,
                depth,
                platform,
                width,
            } => {
                if !(pos(gap_width) && pos(depth) && pos(platform) && pos(width)) {
                    return bad("gap dimensions");
                }
            }
            Self::Box { height, size, ground } => {
                if !(pos(height) && pos(size) && pos(ground)) {
                    return bad("box dimensions");
                }
                if size >= ground {
                    return Err(MeshError::InvalidTerrain("box must be smaller than its ground plane".into()));
                }
            }
            Self::Rough {
                size, cells, amplitude, ..
            } => {
                if cells == 0 || !(pos(size) && pos(amplitude)) {
                    return bad("rough dimensions");
                }
            }
            Self::Slope {
                angle,
                length,
                run_off,
                width,
            } => {
                if !(pos(angle) && pos(length) && pos(run_off) && pos(width)) {
                    return bad("slope dimensions");
                }
                if angle >= std::f64::consts::FRAC_PI_2 {
                    return Err(MeshError::InvalidTerrain("slope angle must be below 90°".into()));
                }
            }
        }
        Ok(())
    }
}

pub fn generate_terrain(spec: &TerrainSpec) -> Result<TriMesh, MeshError> {
    spec.validate()?;
    match *spec {
        TerrainSpec::Flat { size_x, size_y } => heightfield(size_x, size_y, 1, 1, &[0.0; 4]),
        TerrainSpec::Stairs {
            steps,
            rise,
            run,
            width,
            landing,
        } => {
            let mut profile = vec![(0.0, 0.0), (landing, 0.0)];
            for k in 1..=steps {
                let x = landing + (k - 1) as f64 * run;
                let z = k as f64 * rise;
                profile.push((x, z));
                let tread = if k == steps { landing } else { run };
                profile.push((x + tread, z));
            }
            extrude_profile(&profile, width)
        }
        TerrainSpec::Gap {
            gap_width,
            depth,
            platform,
            width,
        } => {
            let x1 = platform;
            let x2 = platform + gap_width;
            let profile = [
                (0.0, 0.0),
                (x1, 0.0),
                (x1, -depth),
                (x2, -depth),
                (x2, 0.0),
                (x2 + platform, 0.0),
            ];
            extrude_profile(&profile, width)
        }
        TerrainSpec::Slope {
            angle,
            length,
            run_off,
            width,
        } => {
            let top = length * angle.tan();
            let profile = [
                (0.0, 0.0),
                (run_off, 0.0),
                (run_off + length, top),
                (2.0 * run_off + length, top),
            ];
            extrude_profile(&profile, width)
        }
        TerrainSpec::Box { height, size, ground } => box_on_ground(height, size, ground),
        TerrainSpec::Rough {
            size,
            cells,
            amplitude,
            seed,
        } => {
            let n = cells as usize + 1;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let heights: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() * amplitude).collect();
            heightfield(size, size, cells as usize, cells as usize, &heights)
        }
    }
}

/// Extrudes an x–z polyline along y over `[-width/2, width/2]`. Triangles
/// are wound so forward-going treads face +z and rising risers face -x.
pub fn extrude_profile(profile: &[(f64, f64)], width: f64) -> Result<TriMesh, MeshError> {
    let half = 0.5 * width;
    let mut vertices = Vec::with_capacity(profile.len() * 2);
    for &(x, z) in profile {
        vertices.push(Point::new(x, -half, z));
        vertices.push(Point::new(x, half, z));
    }
    let mut faces = Vec::with_capacity((profile.len() - 1) * 2);
    for k in 0..profile.len() as u32 - 1 {
        let (a, d) = (2 * k, 2 * k + 1);
        let (b, c) = (2 * k + 2, 2 * k + 3);
        faces.push([a, b, c]);
        faces.push([a, c, d]);
    }
    TriMesh::new(vertices, faces)
}

/// Regular grid heightfield centered on the origin. `heights` is row-major
/// over `(nx + 1) × (ny + 1)` vertices, x fastest.
pub fn heightfield(size_x: f64, size_y: f64, nx: usize, ny: usize, heights: &[f64]) -> Result<TriMesh, MeshError> {
    assert_eq!(heights.len(), (nx + 1) * (ny + 1), "heightfield size mismatch");
    let mut vertices = Vec::with_capacity(heights.len());
    for j in 0..=ny {
        for i in 0..=nx {
            let x = -0.5 * size_x + size_x * i as f64 / nx as f64;
            let y = -0.5 * size_y + size_y * j as f64 / ny as f64;
            vertices.push(Point::new(x, y, heights[j * (nx + 1) + i]));
        }
    }
    let stride = (nx + 1) as u32;
    let mut faces = Vec::with_capacity(nx * ny * 2);
    for j in 0..ny as u32 {
        for i in 0..nx as u32 {
            let a = j * stride + i;
            let b = a + 1;
            let c = a + stride + 1;
            let d = a + stride;
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriMesh::new(vertices, faces)
}

fn box_on_ground(height: f64, size: f64, ground: f64) -> Result<TriMesh, MeshError> {
    let g = 0.5 * ground;
    let b = 0.5 * size;
    let coords = [-g, -b, b, g];
    let mut vertices = Vec::new();
    // 4×4 ground lattice.
    for &y in &coords {
        for &x in &coords {
            vertices.push(Point::new(x, y, 0.0));
        }
    }
    let at = |i: u32, j: u32| j * 4 + i;
    let mut faces = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            if i == 1 && j == 1 {
                continue;
            }
            let (a, bb, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            faces.push([a, bb, c]);
            faces.push([a, c, d]);
        }
    }
    // Top of the box.
    let top0 = vertices.len() as u32;
    for &(x, y) in &[(-b, -b), (b, -b), (b, b), (-b, b)] {
        vertices.push(Point::new(x, y, height));
    }
    faces.push([top0, top0 + 1, top0 + 2]);
    faces.push([top0, top0 + 2, top0 + 3]);
    // Walls: bottom ring shares the ground lattice's hole corners.
    let bottom = [at(1, 1), at(2, 1), at(2, 2), at(1, 2)];
    for k in 0..4u32 {
        let (b0, b1) = (bottom[k as usize], bottom[((k + 1) % 4) as usize]);
        let (t0, t1) = (top0 + k, top0 + (k + 1) % 4);
        faces.push([b0, b1, t1]);
        faces.push([b0, t1, t0]);
    }
    TriMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::compute_adjacency;

    #[test]
    fn stairs_reach_expected_height() {
        let m = generate_terrain(&TerrainSpec::stairs(5, 0.15, 0.30)).unwrap();
        let max_z = m.vertices().iter().map(|v| v.z).fold(f64::MIN, f64::max);
        assert!((max_z - 0.75).abs() < 1e-12);
    }

    #[test]
    fn flat_is_two_upward_triangles() {
        let m = generate_terrain(&TerrainSpec::flat(2.0, 2.0)).unwrap();
        assert_eq!(m.faces().len(), 2);
        for n in m.face_normals() {
            assert!((n - nalgebra::Vector3::z()).norm() < 1e-12);
        }
    }

    #[test]
    fn rough_is_deterministic_per_seed() {
        let a = generate_terrain(&TerrainSpec::rough(7)).unwrap();
        let b = generate_terrain(&TerrainSpec::rough(7)).unwrap();
        let c = generate_terrain(&TerrainSpec::rough(8)).unwrap();
        assert_eq!(crate::mesh::io::write_tpm(&a), crate::mesh::io::write_tpm(&b));
        assert_ne!(a, c);
    }

    #[test]
    fn box_is_outward_facing_and_connected() {
        let m = generate_terrain(&TerrainSpec::boxed(0.3, 1.0)).unwrap();
        let adj = compute_adjacency(&m);
        assert!(adj.non_manifold_edges.is_empty());
        // Top faces point up, every ground face points up.
        assert!(m.face_normals().iter().all(|n| n.z >= -1e-12));
        let sharp = adj.pairs.iter().filter(|a| a.dihedral > 1.0).count();
        assert_eq!(sharp, 12);
    }

    #[test]
    fn risers_face_the_approach() {
        let m = generate_terrain(&TerrainSpec::stairs(1, 0.2, 0.3)).unwrap();
        assert!(m.face_normals().iter().any(|n| (n + nalgebra::Vector3::x()).norm() < 1e-12));
    }

    #[test]
    fn rejects_non_positive_dimensions_and_unknown_kinds() {
        assert!(generate_terrain(&TerrainSpec::stairs(0, 0.15, 0.3)).is_err());
        assert!(generate_terrain(&TerrainSpec::flat(-1.0, 1.0)).is_err());
        assert!("spiral".parse::<TerrainKind>().is_err());
        assert_eq!("gap".parse::<TerrainKind>().unwrap(), TerrainKind::Gap);
    }
}
