//! Greedy polyline growth over the raw edge graph followed by chord
//! simplification.
//!
//! Seeds are taken in ascending canonical vertex order (lexicographic x, y, z)
//! and alignment ties go to the lower vertex id, so the output depends only on
//! the input geometry.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};

use super::{ConcatConfig, EdgeSegment};
use crate::geometry::{point_line_distance, Point};
use crate::mesh::weld_vertices;

const ALIGNMENT_TIE: f64 = 1e-12;

/// Undirected edge graph over canonically numbered vertices.
struct EdgeGraph {
    points: Vec<Point>,
    neighbors: Vec<BTreeSet<u32>>,
    available: BTreeSet<u32>,
}

impl EdgeGraph {
    fn build(raw: &[EdgeSegment]) -> Self {
        let endpoints: Vec<Point> = raw.iter().flat_map(|s| [s.a, s.b]).collect();
        let (unique, remap) = weld_vertices(&endpoints, crate::mesh::DEFAULT_WELD_TOLERANCE);

        let mut order: Vec<u32> = (0..unique.len() as u32).collect();
        order.sort_by(|&i, &j| lexicographic(&unique[i as usize], &unique[j as usize]));
        let mut rank = vec![0u32; unique.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i as usize] = r as u32;
        }
        let points: Vec<Point> = order.iter().map(|&i| unique[i as usize]).collect();

        let mut neighbors = vec![BTreeSet::new(); points.len()];
        for k in 0..raw.len() {
            let a = rank[remap[2 * k] as usize];
            let b = rank[remap[2 * k + 1] as usize];
            if a != b {
                neighbors[a as usize].insert(b);
                neighbors[b as usize].insert(a);
            }
        }
        let available = (0..points.len() as u32)
            .filter(|&v| !neighbors[v as usize].is_empty())
            .collect();
        Self {
            points,
            neighbors,
            available,
        }
    }

    fn remove_edge(&mut self, a: u32, b: u32) {
        for (x, y) in [(a, b), (b, a)] {
            let set = &mut self.neighbors[x as usize];
            set.remove(&y);
            if set.is_empty() {
                self.available.remove(&x);
            }
        }
    }

    /// Neighbor of `end` best aligned with the outgoing direction `prev → end`.
    fn best_continuation(&self, end: u32, prev: u32) -> Option<(u32, f64)> {
        let pe = self.points[end as usize];
        let dir = (pe - self.points[prev as usize]).normalize();
        let mut best: Option<(u32, f64)> = None;
        for &n in &self.neighbors[end as usize] {
            let align = dir.dot(&(self.points[n as usize] - pe).normalize());
            match best {
                Some((_, b)) if align <= b + ALIGNMENT_TIE => {}
                _ => best = Some((n, align)),
            }
        }
        best
    }
}

fn lexicographic(a: &Point, b: &Point) -> Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

/// Merges fragmented raw edges into long straight segments.
pub fn process_edges(raw: &[EdgeSegment], cfg: &ConcatConfig) -> Vec<EdgeSegment> {
    let mut graph = EdgeGraph::build(raw);
    let min_align = cfg.angle_thresh.cos();
    let mut out = Vec::new();

    while let Some(&seed) = graph.available.first() {
        let mut path = VecDeque::from([seed]);
        if let Some(&n) = graph.neighbors[seed as usize].first() {
            graph.remove_edge(seed, n);
            path.push_back(n);
        }
        loop {
            let mut extended = false;
            // Head first, then tail.
            for head in [true, false] {
                let (end, prev) = if head {
                    (path[0], path[1])
                } else {
                    (path[path.len() - 1], path[path.len() - 2])
                };
                if let Some((n, align)) = graph.best_continuation(end, prev) {
                    if align > min_align {
                        graph.remove_edge(end, n);
                        if head {
                            path.push_front(n);
                        } else {
                            path.push_back(n);
                        }
                        extended = true;
                    }
                }
            }
            if !extended {
                break;
            }
        }
        let points: Vec<Point> = path.iter().map(|&v| graph.points[v as usize]).collect();
        simplify_polyline(points, cfg, &mut out);
    }
    out
}

/// Emits maximal chords from the tail backwards; whatever is left once the
/// polyline drops below `min_points` passes through segment by segment.
fn simplify_polyline(mut p: Vec<Point>, cfg: &ConcatConfig, out: &mut Vec<EdgeSegment>) {
    while p.len() >= cfg.min_points {
        let end = p.len() - 1;
        let found = (0..end).find(|&i| {
            p[i..=end]
                .iter()
                .all(|q| point_line_distance(q, &p[i], &p[end]) < cfg.tolerance)
        });
        let Some(i) = found else { break };
        push_segment(out, p[i], p[end]);
        p.truncate(i + 1);
    }
    for w in p.windows(2) {
        push_segment(out, w[0], w[1]);
    }
}

fn push_segment(out: &mut Vec<EdgeSegment>, a: Point, b: Point) {
    if let Ok(s) = EdgeSegment::new(a, b) {
        out.push(s);
    }
}
