#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use terrain_perception::edges::EdgeSegment;
use terrain_perception::geometry::Point;
use terrain_perception::mesh::{generate_terrain, load_mesh, MeshFormat, TerrainSpec, TriMesh};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn cube() -> TriMesh {
    load_mesh(&data("cube.obj"), MeshFormat::Obj).unwrap()
}

/// The five procedural fixtures used across the suites.
pub fn terrains() -> Vec<(&'static str, TriMesh)> {
    [
        ("stairs", TerrainSpec::stairs(5, 0.15, 0.3)),
        ("gap", TerrainSpec::gap(0.6)),
        ("box", TerrainSpec::boxed(0.3, 1.0)),
        ("rough", TerrainSpec::rough(11)),
        ("slope", TerrainSpec::slope(20f64.to_radians())),
    ]
    .into_iter()
    .map(|(name, spec)| (name, generate_terrain(&spec).unwrap()))
    .collect()
}

pub fn stairs() -> TriMesh {
    generate_terrain(&TerrainSpec::stairs(5, 0.15, 0.3)).unwrap()
}

fn key(p: &Point) -> [u64; 3] {
    [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]
}

/// Order-free identity of a segment set.
pub fn segment_set(edges: &[EdgeSegment]) -> BTreeSet<[[u64; 3]; 2]> {
    edges
        .iter()
        .map(|e| {
            let (a, b) = (key(&e.a), key(&e.b));
            if a <= b {
                [a, b]
            } else {
                [b, a]
            }
        })
        .collect()
}

/// O(F²) sharp-edge filter: every face pair sharing exactly two vertices,
/// with normals recomputed from the corners.
pub fn brute_force_sharp_edges(mesh: &TriMesh, tau: f64) -> Vec<EdgeSegment> {
    let v = mesh.vertices();
    let faces = mesh.faces();
    let normal = |f: &[u32; 3]| {
        let (a, b, c) = (v[f[0] as usize], v[f[1] as usize], v[f[2] as usize]);
        (b - a).cross(&(c - a)).normalize()
    };
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for i in 0..faces.len() {
        for j in i + 1..faces.len() {
            let shared: Vec<u32> = faces[i].iter().copied().filter(|x| faces[j].contains(x)).collect();
            if shared.len() != 2 {
                continue;
            }
            let cos = normal(&faces[i]).dot(&normal(&faces[j])).clamp(-1.0, 1.0);
            let e = (shared[0].min(shared[1]), shared[0].max(shared[1]));
            if cos.acos() > tau && seen.insert(e) {
                out.push(EdgeSegment {
                    a: v[e.0 as usize],
                    b: v[e.1 as usize],
                });
            }
        }
    }
    out
}
