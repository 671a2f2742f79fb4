//! Binned-SAH bounding volume hierarchy over triangles.

use crate::geometry::{ray_triangle, Aabb, Point, Vector};

const LEAF_SIZE: usize = 4;
const BINS: usize = 12;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive in `order`. Interior: index of the right child
    /// (the left child always follows its parent).
    offset: u32,
    /// Primitive count for leaves, 0 for interior nodes.
    count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: f64,
    pub triangle: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

struct BuildItem {
    bounds: Aabb,
    centroid: Point,
}

impl Bvh {
    pub fn build(triangles: &[[Point; 3]]) -> Self {
        let items: Vec<BuildItem> = triangles
            .iter()
            .map(|t| {
                // Padding keeps hits inside the barycentric slack within the box.
                let tight = Aabb::from_points(t.iter());
                let bounds = tight.padded(1e-8 * (1.0 + tight.extent().norm()));
                BuildItem {
                    bounds,
                    centroid: Point::from((t[0].coords + t[1].coords + t[2].coords) / 3.0),
                }
            })
            .collect();
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        if !triangles.is_empty() {
            build_recursive(&items, &mut order, 0, triangles.len(), &mut nodes);
        }
        Self { nodes, order }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Every triangle index stored in a leaf, in leaf order.
    pub fn leaf_triangles(&self) -> impl Iterator<Item = u32> + '_ {
        self.order.iter().copied()
    }

    /// Triangles whose (padded) bounds overlap the planar rectangle
    /// `[min, max]`, ignoring z.
    pub fn overlapping_xy(&self, min: [f64; 2], max: [f64; 2]) -> Vec<u32> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0u32];
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx as usize];
            let b = &node.bounds;
            if b.max.x < min[0] || b.min.x > max[0] || b.max.y < min[1] || b.min.y > max[1] {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                out.extend_from_slice(&self.order[start..start + node.count as usize]);
            } else {
                stack.push(node.offset);
                stack.push(idx + 1);
            }
        }
        out
    }

    /// Nearest hit with distance in `(t_min, t_max)`.
    pub fn intersect(&self, triangles: &[[Point; 3]], origin: &Point, dir: &Vector, t_min: f64, t_max: f64) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = dir.map(|c| 1.0 / c);
        let mut best: Option<Hit> = None;
        let mut limit = t_max;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        let mut node_idx = 0u32;
        loop {
            let node = &self.nodes[node_idx as usize];
            if node.bounds.ray_entry(origin, &inv, t_min, limit).is_some() {
                if node.count > 0 {
                    let start = node.offset as usize;
                    for &tri in &self.order[start..start + node.count as usize] {
                        if let Some(t) = ray_triangle(origin, dir, &triangles[tri as usize], t_min) {
                            if t < limit || (t == limit && best.is_some_and(|b| tri < b.triangle)) {
                                limit = t;
                                best = Some(Hit {
                                    distance: t,
                                    triangle: tri,
                                });
                            }
                        }
                    }
                } else {
                    // Visit the nearer child first.
                    let left = node_idx + 1;
                    let right = node.offset;
                    let l_entry = self.nodes[left as usize].bounds.ray_entry(origin, &inv, t_min, limit);
                    let r_entry = self.nodes[right as usize].bounds.ray_entry(origin, &inv, t_min, limit);
                    match (l_entry, r_entry) {
                        (Some(l), Some(r)) => {
                            let (near, far) = if l <= r { (left, right) } else { (right, left) };
                            stack.push(far);
                            node_idx = near;
                            continue;
                        }
                        (Some(_), None) => {
                            node_idx = left;
                            continue;
                        }
                        (None, Some(_)) => {
                            node_idx = right;
                            continue;
                        }
                        (None, None) => {}
                    }
                }
            }
            match stack.pop() {
                Some(next) => node_idx = next,
                None => break,
            }
        }
        best
    }
}

fn build_recursive(items: &[BuildItem], order: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
    let node_idx = nodes.len() as u32;
    let slice = &mut order[start..end];
    let bounds = slice
        .iter()
        .fold(Aabb::empty(), |acc, &i| acc.union(&items[i as usize].bounds));
    nodes.push(Node {
        bounds,
        offset: start as u32,
        count: (end - start) as u32,
    });
    let count = end - start;
    if count <= LEAF_SIZE {
        return node_idx;
    }

    let cb = Aabb::from_points(slice.iter().map(|&i| &items[i as usize].centroid));
    let extent = cb.extent();
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    if extent[axis] <= 0.0 {
        // All centroids coincide; nothing to split on.
        return node_idx;
    }

    let bin_of = |c: f64| -> usize { (((c - cb.min[axis]) / extent[axis] * BINS as f64) as usize).min(BINS - 1) };
    let mut bin_bounds = [Aabb::empty(); BINS];
    let mut bin_counts = [0usize; BINS];
    for &i in slice.iter() {
        let b = bin_of(items[i as usize].centroid[axis]);
        bin_counts[b] += 1;
        bin_bounds[b] = bin_bounds[b].union(&items[i as usize].bounds);
    }
    let mut best_cost = f64::INFINITY;
    let mut best_split = BINS / 2;
    for split in 1..BINS {
        let (mut lb, mut rb) = (Aabb::empty(), Aabb::empty());
        let (mut lc, mut rc) = (0, 0);
        for b in 0..split {
            lb = lb.union(&bin_bounds[b]);
            lc += bin_counts[b];
        }
        for b in split..BINS {
            rb = rb.union(&bin_bounds[b]);
            rc += bin_counts[b];
        }
        if lc == 0 || rc == 0 {
            continue;
        }
        let cost = lb.surface_area() * lc as f64 + rb.surface_area() * rc as f64;
        if cost < best_cost {
            best_cost = cost;
            best_split = split;
        }
    }

    let mut mid = partition(slice, |&i| bin_of(items[i as usize].centroid[axis]) < best_split);
    if mid == 0 || mid == count {
        // Median fallback.
        slice.sort_by(|&a, &b| items[a as usize].centroid[axis].total_cmp(&items[b as usize].centroid[axis]));
        mid = count / 2;
    }

    nodes[node_idx as usize].count = 0;
    build_recursive(items, order, start, start + mid, nodes);
    let right = build_recursive(items, order, start + mid, end, nodes);
    nodes[node_idx as usize].offset = right;
    node_idx
}

fn partition<T>(slice: &mut [T], pred: impl Fn(&T) -> bool) -> usize {
    let mut i = 0;
    for j in 0..slice.len() {
        if pred(&slice[j]) {
            slice.swap(i, j);
            i += 1;
        }
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_terrain, TerrainSpec};

    #[test]
    fn every_triangle_is_reachable() {
        let mesh = generate_terrain(&TerrainSpec::rough(3)).unwrap();
        let tris: Vec<_> = mesh.triangles().collect();
        let bvh = Bvh::build(&tris);
        let mut seen: Vec<u32> = bvh.leaf_triangles().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..tris.len() as u32).collect::<Vec<_>>());
    }

    #[test]
    fn empty_bvh_never_hits() {
        let bvh = Bvh::build(&[]);
        assert!(bvh
            .intersect(&[], &Point::origin(), &Vector::x(), 0.0, f64::INFINITY)
            .is_none());
    }
}
