//! Exhaustive reference implementations of the accelerated queries.
//!
//! These ship with the library so hosts can verify an installation against
//! the grid and BVH paths.

use crate::edges::{grid::deepest, Capsule, EdgeSegment, Penetration};
use crate::geometry::{Point, Vector};
use crate::render::Scene;

/// Deepest penetration over every capsule, in edge order. An empty edge list
/// yields zero offsets.
pub fn oracle_penetration(edges: &[EdgeSegment], radius: f64, points: &[Point]) -> Vec<Penetration> {
    let capsules: Vec<Capsule> = edges
        .iter()
        .map(|e| Capsule {
            a: e.a,
            b: e.b,
            radius,
        })
        .collect();
    points
        .iter()
        .map(|p| deepest(p, capsules.iter().enumerate().map(|(i, c)| (i as u32, c))))
        .collect()
}

/// First-hit distance along each `(origin, direction)` ray by testing every
/// triangle.
pub fn oracle_raycast(scene: &Scene, rays: &[(Point, Vector)], t_min: f64) -> Vec<Option<f64>> {
    rays.iter()
        .map(|(o, d)| scene.cast_exhaustive(o, d, t_min).map(|h| h.distance))
        .collect()
}
