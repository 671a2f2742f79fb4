//! Small geometric kernels shared by the edge grid, the BVH and the oracles.
//!
//! Every accelerated query and its brute-force counterpart call into these
//! functions, so agreement between them is exact rather than approximate.

use nalgebra::{Point3, Vector3};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

/// Barycentric slack used by [`ray_triangle`] so rays through a shared edge
/// are never lost between the two neighbouring triangles.
pub const BARYCENTRIC_SLACK: f64 = 1e-10;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut bb = Self::empty();
        for p in points {
            bb.grow(p);
        }
        bb
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn grow(&mut self, p: &Point) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn padded(&self, pad: f64) -> Aabb {
        let v = Vector::repeat(pad);
        Aabb {
            min: self.min - v,
            max: self.max + v,
        }
    }

    pub fn extent(&self) -> Vector {
        self.max - self.min
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    /// Slab test. Returns the entry distance when the ray overlaps the box
    /// somewhere in `[t_min, t_max]`.
    pub fn ray_entry(&self, origin: &Point, inv_dir: &Vector, t_min: f64, t_max: f64) -> Option<f64> {
        let mut lo = t_min;
        let mut hi = t_max;
        for k in 0..3 {
            let t0 = (self.min[k] - origin[k]) * inv_dir[k];
            let t1 = (self.max[k] - origin[k]) * inv_dir[k];
            let (near, far) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            // NaN from 0 * inf means the origin lies on the slab plane: keep the bound.
            if near > lo {
                lo = near;
            }
            if far < hi {
                hi = far;
            }
            if lo > hi {
                return None;
            }
        }
        Some(lo)
    }
}

/// Closest point to `p` on the segment `[a, b]`.
pub fn closest_point_on_segment(p: &Point, a: &Point, b: &Point) -> Point {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    (p - closest_point_on_segment(p, a, b)).norm()
}

/// Distance from `p` to the infinite line through `a` and `b`. Falls back to
/// the point distance when `a == b`.
pub fn point_line_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len = ab.norm();
    if len == 0.0 {
        return (p - a).norm();
    }
    (p - a).cross(&ab).norm() / len
}

/// Any unit vector perpendicular to `axis`, chosen deterministically.
pub fn any_perpendicular(axis: &Vector) -> Vector {
    let helper = if axis.x.abs() <= axis.y.abs() && axis.x.abs() <= axis.z.abs() {
        Vector::x()
    } else if axis.y.abs() <= axis.z.abs() {
        Vector::y()
    } else {
        Vector::z()
    };
    let perp = axis.cross(&helper);
    let n = perp.norm();
    if n == 0.0 {
        Vector::z()
    } else {
        perp / n
    }
}

/// Möller–Trumbore ray/triangle intersection. Returns the ray parameter of
/// the hit when it lies strictly beyond `t_min`. Rays parallel to the
/// triangle plane never hit.
pub fn ray_triangle(origin: &Point, dir: &Vector, tri: &[Point; 3], t_min: f64) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-14 * scale {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - tri[0];
    let u = tvec.dot(&pvec) * inv_det;
    if !(-BARYCENTRIC_SLACK..=1.0 + BARYCENTRIC_SLACK).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    if v < -BARYCENTRIC_SLACK || u + v > 1.0 + BARYCENTRIC_SLACK {
        return None;
    }
    let t = e2.dot(&qvec) * inv_det;
    (t > t_min).then_some(t)
}
