use std::collections::HashMap;

use super::TriMesh;

/// Two faces sharing a manifold edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjacency {
    /// Face indices, lower first.
    pub faces: (u32, u32),
    /// Shared vertex indices, lower first.
    pub edge: (u32, u32),
    /// Angle between the two face normals, in `[0, π]`. Zero means coplanar.
    pub dihedral: f64,
}

/// Face adjacency of a mesh plus the edges that could not be paired.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaceAdjacency {
    /// One entry per interior edge shared by exactly two faces, sorted by edge.
    pub pairs: Vec<Adjacency>,
    /// Edges used by a single face.
    pub boundary_edges: Vec<(u32, u32)>,
    /// Edges used by three or more faces; excluded from `pairs`.
    pub non_manifold_edges: Vec<(u32, u32)>,
}

/// Angle between two unit normals.
pub fn dihedral_angle(n1: &nalgebra::Vector3<f64>, n2: &nalgebra::Vector3<f64>) -> f64 {
    n1.dot(n2).clamp(-1.0, 1.0).acos()
}

pub fn compute_adjacency(mesh: &TriMesh) -> FaceAdjacency {
    let mut by_edge: HashMap<(u32, u32), Vec<u32>> = HashMap::with_capacity(mesh.faces().len() * 3 / 2);
    for (fi, f) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            by_edge.entry((a.min(b), a.max(b))).or_default().push(fi as u32);
        }
    }
    let mut edges: Vec<_> = by_edge.into_iter().collect();
    edges.sort_unstable_by_key(|(e, _)| *e);

    let normals = mesh.face_normals();
    let mut out = FaceAdjacency::default();
    for (edge, faces) in edges {
        match faces.as_slice() {
            [_] => out.boundary_edges.push(edge),
            &[f1, f2] => {
                let (lo, hi) = (f1.min(f2), f1.max(f2));
                out.pairs.push(Adjacency {
                    faces: (lo, hi),
                    edge,
                    dihedral: dihedral_angle(&normals[lo as usize], &normals[hi as usize]),
                });
            }
            _ => out.non_manifold_edges.push(edge),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn single_triangle_has_three_boundary_edges() {
        let m = TriMesh::new(
            vec![Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(0., 1., 0.)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let adj = compute_adjacency(&m);
        assert!(adj.pairs.is_empty());
        assert_eq!(adj.boundary_edges.len(), 3);
    }

    #[test]
    fn flat_quad_has_one_coplanar_pair() {
        let m = TriMesh::new(
            vec![
                Point::new(0., 0., 0.),
                Point::new(1., 0., 0.),
                Point::new(1., 1., 0.),
                Point::new(0., 1., 0.),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let adj = compute_adjacency(&m);
        assert_eq!(adj.pairs.len(), 1);
        assert!(adj.pairs[0].dihedral.abs() < 1e-9);
        assert_eq!(adj.pairs[0].edge, (0, 2));
    }

    #[test]
    fn fan_of_three_faces_is_non_manifold() {
        let m = TriMesh::new(
            vec![
                Point::new(0., 0., 0.),
                Point::new(1., 0., 0.),
                Point::new(0., 1., 0.),
                Point::new(0., -1., 0.),
                Point::new(0., 0., 1.),
            ],
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        )
        .unwrap();
        let adj = compute_adjacency(&m);
        assert!(adj.pairs.is_empty());
        assert_eq!(adj.non_manifold_edges, vec![(0, 1)]);
    }
}
