//! Flat-patch rejection sampling over a ray-cast terrain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CommandError;
use crate::geometry::Point;
use crate::render::Scene;

/// Candidates evaluated per parallel round.
const BATCH: usize = 256;

/// Downward rays on a center point plus concentric rings. The outer ring sits
/// at `radius / cos(π / per_ring)` so the polygon it spans contains the whole
/// disk: any straight crease crossing the disk then has ring points on both
/// sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskPattern {
    pub rings: usize,
    pub per_ring: usize,
}

impl Default for DiskPattern {
    fn default() -> Self {
        Self { rings: 2, per_ring: 8 }
    }
}

impl DiskPattern {
    pub fn ray_count(&self) -> usize {
        1 + self.rings * self.per_ring
    }

    /// Radius of the outermost ring for a disk of `radius`.
    pub fn reach(&self, radius: f64) -> f64 {
        radius / (std::f64::consts::PI / self.per_ring as f64).cos()
    }

    /// Planar `(dx, dy)` offsets of every ray.
    pub fn offsets(&self, radius: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.ray_count());
        out.push((0.0, 0.0));
        let reach = self.reach(radius);
        for ring in 1..=self.rings {
            let rho = reach * ring as f64 / self.rings as f64;
            for j in 0..self.per_ring {
                let a = std::f64::consts::TAU * j as f64 / self.per_ring as f64;
                out.push((rho * a.cos(), rho * a.sin()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchConfig {
    /// Disk radius r (m).
    pub radius: f64,
    /// Maximum height spread δ (m), exclusive.
    pub max_height_diff: f64,
    /// Number of patches to return.
    pub count: usize,
    pub pattern: DiskPattern,
    /// Candidate budget before giving up.
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            radius: 0.3,
            max_height_diff: 0.05,
            count: 16,
            pattern: DiskPattern::default(),
            max_attempts: 10_000,
            seed: 0,
        }
    }
}

impl PatchConfig {
    pub fn validate(&self) -> Result<(), CommandError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(CommandError::Config(format!("patch radius {} must be positive", self.radius)));
        }
        if !(self.max_height_diff > 0.0 && self.max_height_diff.is_finite()) {
            return Err(CommandError::Config(format!(
                "max height difference {} must be positive",
                self.max_height_diff
            )));
        }
        if self.count == 0 {
            return Err(CommandError::Config("patch count must be at least 1".into()));
        }
        if self.pattern.rings == 0 || self.pattern.per_ring < 4 {
            return Err(CommandError::Config("disk pattern needs ≥ 1 ring of ≥ 4 rays".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatPatch {
    pub x: f64,
    pub y: f64,
    /// Mean of the sampled heights.
    pub z: f64,
}

impl FlatPatch {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y, self.z)
    }
}

/// Planar sampling rectangle `[min_x, min_y, max_x, max_y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl SampleBounds {
    /// Terrain footprint shrunk so every ray of `pattern` stays over it.
    pub fn inside(scene: &Scene, cfg: &PatchConfig) -> Self {
        let b = scene.bounds();
        let m = cfg.pattern.reach(cfg.radius);
        Self {
            min: [b.min.x + m, b.min.y + m],
            max: [b.max.x - m, b.max.y - m],
        }
    }

    fn is_valid(&self) -> bool {
        self.min.iter().chain(&self.max).all(|v| v.is_finite()) && self.min[0] <= self.max[0] && self.min[1] <= self.max[1]
    }
}

/// Heights seen by `pattern` around `(x, y)`, or `None` if any ray misses.
pub fn disk_heights(scene: &Scene, x: f64, y: f64, radius: f64, pattern: &DiskPattern) -> Option<Vec<f64>> {
    pattern
        .offsets(radius)
        .into_iter()
        .map(|(dx, dy)| scene.height_at(x + dx, y + dy))
        .collect()
}

/// Flatness test at one location; returns the accepted patch.
///
/// The ray pattern runs first. A disk that passes is refined with extra
/// samples at terrain features inside it: facet corners, and the point of
/// each facet edge nearest the center. Each is nudged into its facet before
/// casting, so a convex corner poking between the rays is still seen.
pub fn check_patch(scene: &Scene, x: f64, y: f64, radius: f64, delta: f64, pattern: &DiskPattern) -> Option<FlatPatch> {
    let h = disk_heights(scene, x, y, radius, pattern)?;
    let (mut lo, mut hi) = h
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo >= delta {
        return None;
    }
    for (fx, fy) in feature_samples(scene, x, y, radius) {
        let z = scene.height_at(fx, fy)?;
        lo = lo.min(z);
        hi = hi.max(z);
        if hi - lo >= delta {
            return None;
        }
    }
    Some(FlatPatch {
        x,
        y,
        z: h.iter().sum::<f64>() / h.len() as f64,
    })
}

/// Relative step from a feature toward its facet centroid.
const NUDGE: f64 = 1e-6;

fn feature_samples(scene: &Scene, x: f64, y: f64, radius: f64) -> Vec<(f64, f64)> {
    let c = nalgebra::Point2::new(x, y);
    let mut out = Vec::new();
    for t in scene.triangles_in_xy([x - radius, y - radius], [x + radius, y + radius]) {
        let tri = scene.triangles()[t as usize];
        let p = tri.map(|v| nalgebra::Point2::new(v.x, v.y));
        // Vertical facets are invisible to downward rays.
        if (p[1] - p[0]).perp(&(p[2] - p[0])).abs() < 1e-12 {
            continue;
        }
        let g = nalgebra::Point2::from((p[0].coords + p[1].coords + p[2].coords) / 3.0);
        let mut push = |q: nalgebra::Point2<f64>| {
            if (q - c).norm() < radius {
                let n = q + (g - q) * NUDGE;
                out.push((n.x, n.y));
            }
        };
        for k in 0..3 {
            let (a, b) = (p[k], p[(k + 1) % 3]);
            push(a);
            let ab = b - a;
            let s = ((c - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            push(a + ab * s);
        }
    }
    out
}

/// Candidate `k` draws its position from its own ChaCha8 stream, so the
/// result depends on the seed alone and not on how work is split.
fn candidate(seed: u64, k: usize, bounds: &SampleBounds) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let x = bounds.min[0] + rng.random::<f64>() * (bounds.max[0] - bounds.min[0]);
    let y = bounds.min[1] + rng.random::<f64>() * (bounds.max[1] - bounds.min[1]);
    (x, y)
}

/// Rejection-samples `cfg.count` flat patches inside `bounds`. Candidates are
/// checked in parallel batches and accepted in candidate order.
pub fn sample_flat_patches(scene: &Scene, cfg: &PatchConfig, bounds: &SampleBounds) -> Result<Vec<FlatPatch>, CommandError> {
    cfg.validate()?;
    if !bounds.is_valid() {
        return Err(CommandError::Config(format!("empty sampling bounds {bounds:?}")));
    }
    let mut out = Vec::with_capacity(cfg.count);
    let mut next = 0;
    while out.len() < cfg.count && next < cfg.max_attempts {
        let end = (next + BATCH).min(cfg.max_attempts);
        let found: Vec<Option<FlatPatch>> = (next..end)
            .into_par_iter()
            .map(|k| {
                let (x, y) = candidate(cfg.seed, k, bounds);
                check_patch(scene, x, y, cfg.radius, cfg.max_height_diff, &cfg.pattern)
            })
            .collect();
        out.extend(found.into_iter().flatten().take(cfg.count - out.len()));
        next = end;
    }
    if out.len() < cfg.count {
        return Err(CommandError::BudgetExhausted {
            found: out.len(),
            wanted: cfg.count,
            attempts: cfg.max_attempts,
        });
    }
    Ok(out)
}

pub fn patches_to_json(patches: &[FlatPatch]) -> String {
    let rows: Vec<[f64; 3]> = patches.iter().map(|p| [p.x, p.y, p.z]).collect();
    serde_json::to_string(&rows).expect("patches serialize")
}

pub fn patches_from_json(text: &str) -> Result<Vec<FlatPatch>, CommandError> {
    let rows: Vec<[f64; 3]> = serde_json::from_str(text).map_err(|e| CommandError::Config(e.to_string()))?;
    Ok(rows.into_iter().map(|[x, y, z]| FlatPatch { x, y, z }).collect())
}
