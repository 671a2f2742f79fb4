use rayon::prelude::*;

use super::{EdgeError, EdgeSegment};
use crate::geometry::{any_perpendicular, closest_point_on_segment, Aabb, Point, Vector};

/// Segment swept by a sphere of `radius`: a cylinder with hemispherical caps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Point,
    pub b: Point,
    pub radius: f64,
}

/// Result of a single point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penetration {
    /// Minimum-norm translation moving the point out of the deepest capsule.
    pub offset: Vector,
    /// `‖offset‖`; zero outside every capsule.
    pub depth: f64,
    /// Index of the deepest capsule, if any contains the point.
    pub capsule: Option<u32>,
    /// Capsule distance evaluations performed.
    pub tests: u32,
}

impl Penetration {
    pub const NONE: Penetration = Penetration {
        offset: Vector::new(0.0, 0.0, 0.0),
        depth: 0.0,
        capsule: None,
        tests: 0,
    };
}

impl Capsule {
    /// Penetration depth and push-out offset, or `None` when `p` is outside.
    pub fn penetration(&self, p: &Point) -> Option<(f64, Vector)> {
        let c = closest_point_on_segment(p, &self.a, &self.b);
        let delta = p - c;
        let dist = delta.norm();
        if dist >= self.radius {
            return None;
        }
        let depth = self.radius - dist;
        let dir = if dist > 0.0 {
            delta / dist
        } else {
            any_perpendicular(&(self.b - self.a))
        };
        Some((depth, dir * depth))
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points([&self.a, &self.b]).padded(self.radius)
    }
}

/// Deepest-capsule rule shared by the grid and the brute-force oracle:
/// strictly deeper wins, so ties keep the lowest capsule index as long as
/// candidates are visited in ascending order.
pub(crate) fn deepest<'a>(p: &Point, capsules: impl Iterator<Item = (u32, &'a Capsule)>) -> Penetration {
    let mut best = Penetration::NONE;
    for (idx, cap) in capsules {
        best.tests += 1;
        if let Some((depth, offset)) = cap.penetration(p) {
            if depth > best.depth {
                best.depth = depth;
                best.offset = offset;
                best.capsule = Some(idx);
            }
        }
    }
    best
}

/// Uniform `N³` cell grid over the radius-padded bounding box of the edges.
/// Each cell lists, in ascending order, every capsule whose AABB overlaps it.
#[derive(Debug, Clone)]
pub struct CylinderGrid {
    capsules: Vec<Capsule>,
    bounds: Aabb,
    dims: [usize; 3],
    cell_size: Vector,
    /// CSR layout: capsules of cell `c` are `indices[starts[c]..starts[c + 1]]`.
    starts: Vec<u32>,
    indices: Vec<u32>,
}

impl CylinderGrid {
    pub fn build(edges: &[EdgeSegment], radius: f64, resolution: usize) -> Result<Self, EdgeError> {
        if edges.is_empty() {
            return Err(EdgeError::NoEdges);
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(EdgeError::Radius(radius));
        }
        if resolution == 0 {
            return Err(EdgeError::GridResolution);
        }
        let capsules: Vec<Capsule> = edges
            .iter()
            .map(|e| Capsule {
                a: e.a,
                b: e.b,
                radius,
            })
            .collect();
        let core = Aabb::from_points(edges.iter().flat_map(|e| [&e.a, &e.b]));
        let n = if core.extent().norm() == 0.0 { 1 } else { resolution };
        let bounds = core.padded(radius);
        let dims = [n; 3];
        let cell_size = bounds.extent() / n as f64;

        let cell_count = n * n * n;
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); cell_count];
        for (idx, cap) in capsules.iter().enumerate() {
            let bb = cap.aabb();
            let lo = Self::cell_coords_in(&bounds, &cell_size, dims, &bb.min);
            let hi = Self::cell_coords_in(&bounds, &cell_size, dims, &bb.max);
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        buckets[(z * n + y) * n + x].push(idx as u32);
                    }
                }
            }
        }
        let mut starts = Vec::with_capacity(cell_count + 1);
        let mut indices = Vec::new();
        starts.push(0);
        for b in buckets {
            indices.extend(b);
            starts.push(indices.len() as u32);
        }
        Ok(Self {
            capsules,
            bounds,
            dims,
            cell_size,
            starts,
            indices,
        })
    }

    fn cell_coords_in(bounds: &Aabb, cell: &Vector, dims: [usize; 3], p: &Point) -> [usize; 3] {
        [0, 1, 2].map(|k| {
            let f = ((p[k] - bounds.min[k]) / cell[k]).floor();
            (f.max(0.0) as usize).min(dims[k] - 1)
        })
    }

    pub fn capsules(&self) -> &[Capsule] {
        &self.capsules
    }

    pub fn radius(&self) -> f64 {
        self.capsules[0].radius
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.dims
    }

    /// Capsules listed in the cell containing `p`; empty outside the grid.
    pub fn candidates(&self, p: &Point) -> &[u32] {
        if !self.bounds.contains(p) {
            return &[];
        }
        let [x, y, z] = Self::cell_coords_in(&self.bounds, &self.cell_size, self.dims, p);
        let c = (z * self.dims[1] + y) * self.dims[0] + x;
        &self.indices[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    pub fn query(&self, p: &Point) -> Penetration {
        deepest(p, self.candidates(p).iter().map(|&i| (i, &self.capsules[i as usize])))
    }

    /// Parallel batch query; output order matches input order.
    pub fn query_many(&self, points: &[Point]) -> Vec<Penetration> {
        points.par_iter().map(|p| self.query(p)).collect()
    }
}
