mod common;

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use proptest::prelude::*;
use terrain_perception::edges::{
    detect, detect_sharp_edges, process_edges, ConcatConfig, CylinderGrid, EdgeDetectConfig, EdgeSegment,
};
use terrain_perception::geometry::Point;
use terrain_perception::mesh::compute_adjacency;
use terrain_perception::oracle::oracle_penetration;

fn seg(a: [f64; 3], b: [f64; 3]) -> EdgeSegment {
    EdgeSegment::new(Point::from(a), Point::from(b)).unwrap()
}

fn concat(theta_deg: f64) -> ConcatConfig {
    ConcatConfig {
        angle_thresh: theta_deg.to_radians(),
        min_points: 3,
        tolerance: 1e-3,
    }
}

#[test]
fn detection_equals_brute_force_dihedral_filter() {
    let start = Instant::now();
    let mut meshes = common::terrains();
    meshes.push(("cube", common::cube()));
    for (name, mesh) in &meshes {
        let adj = compute_adjacency(mesh);
        for tau in [FRAC_PI_4, 30f64.to_radians(), 10f64.to_radians()] {
            let fast = detect_sharp_edges(mesh, &adj, tau);
            let slow = common::brute_force_sharp_edges(mesh, tau);
            assert_eq!(fast.len(), common::segment_set(&fast).len(), "{name}: duplicates");
            assert_eq!(common::segment_set(&fast), common::segment_set(&slow), "{name} at τ={tau}");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn cube_has_twelve_sharp_edges() {
    let cube = common::cube();
    assert_eq!(cube.vertices().len(), 8);
    assert_eq!(cube.faces().len(), 12);
    let edges = detect_sharp_edges(&cube, &compute_adjacency(&cube), FRAC_PI_4);
    assert_eq!(edges.len(), 12);
    for e in &edges {
        assert!((e.length() - 1.0).abs() < 1e-12, "diagonal leaked: {e:?}");
    }
}

#[test]
fn three_step_stairs_edge_length() {
    let mesh = terrain_perception::mesh::generate_terrain(&terrain_perception::TerrainSpec::stairs(3, 0.15, 0.3)).unwrap();
    let edges = detect_sharp_edges(&mesh, &compute_adjacency(&mesh), FRAC_PI_4);
    // Three lips plus three riser feet, each spanning the 2 m width.
    let interior: f64 = edges
        .iter()
        .filter(|e| (e.a.y - e.b.y).abs() > 1e-12)
        .map(EdgeSegment::length)
        .sum();
    assert!((interior - 6.0 * 2.0).abs() < 1e-6, "union length {interior}");
}

#[test]
fn collinear_chain_trace() {
    let raw: Vec<_> = (0..10).map(|i| seg([i as f64, 0., 0.], [i as f64 + 1., 0., 0.])).collect();
    assert_eq!(process_edges(&raw, &concat(10.0)), vec![seg([0., 0., 0.], [10., 0., 0.])]);
}

#[test]
fn l_shape_trace() {
    let mut raw: Vec<_> = (0..5).map(|i| seg([5., i as f64, 0.], [5., i as f64 + 1., 0.])).collect();
    raw.extend((0..5).map(|i| seg([i as f64, 0., 0.], [i as f64 + 1., 0., 0.])));
    assert_eq!(
        process_edges(&raw, &concat(10.0)),
        vec![seg([0., 0., 0.], [5., 0., 0.]), seg([5., 0., 0.], [5., 5., 0.])]
    );
}

#[test]
fn disjoint_trace() {
    let raw = vec![seg([0., 2., 0.], [1., 2., 1.]), seg([0., 0., 0.], [1., 0., 0.])];
    assert_eq!(process_edges(&raw, &concat(10.0)), vec![raw[1], raw[0]]);
}

#[test]
fn concat_coverage_on_all_terrains() {
    let cfg = EdgeDetectConfig::default();
    for (name, mesh) in common::terrains() {
        let out = detect(&mesh, &cfg).unwrap();
        assert_eq!(out.edges.raw.is_empty(), out.edges.merged.is_empty());
        assert!(out.edges.merged.len() <= out.edges.raw.len(), "{name}");
        for r in &out.edges.raw {
            let m = r.midpoint();
            let best = out.edges.merged.iter().map(|f| f.distance_to(&m)).fold(f64::INFINITY, f64::min);
            assert!(best < cfg.concat.tolerance, "{name}: midpoint {m:?} is {best} from the merged set");
        }
    }
}

#[test]
fn threshold_monotonicity() {
    for (name, mesh) in common::terrains() {
        let adj = compute_adjacency(&mesh);
        let mut prev = None;
        for deg in [5.0, 15.0, 30.0, 45.0, 60.0, 89.0] {
            let set = common::segment_set(&detect_sharp_edges(&mesh, &adj, f64::to_radians(deg)));
            if let Some(p) = &prev {
                assert!(set.is_subset(p), "{name} at {deg}°");
            }
            prev = Some(set);
        }
    }
}

#[test]
fn grid_matches_oracle_on_stairs() {
    let mesh = common::stairs();
    let cfg = EdgeDetectConfig::default();
    let out = detect(&mesh, &cfg).unwrap();
    let grid = out.grid.unwrap();
    let merged = &out.edges.merged;
    let b = mesh.bounds().padded(0.1);
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut unit = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let pts: Vec<Point> = (0..10_000)
        .map(|_| {
            let e = b.extent();
            Point::new(b.min.x + unit() * e.x, b.min.y + unit() * e.y, b.min.z + unit() * e.z)
        })
        .collect();
    let fast = grid.query_many(&pts);
    let slow = oracle_penetration(merged, cfg.cylinder_radius, &pts);
    let hits = fast.iter().filter(|p| p.depth > 0.0).count();
    assert!(hits > 0);
    for (f, s) in fast.iter().zip(&slow) {
        assert!((f.offset - s.offset).norm() < 1e-9);
    }
}

#[test]
fn empty_cell_runs_no_tests() {
    let grid = CylinderGrid::build(&[seg([0., 0., 0.], [1., 0., 0.])], 0.05, 4).unwrap();
    let far = grid.query(&Point::new(10.0, 10.0, 10.0));
    assert_eq!((far.depth, far.tests), (0.0, 0));
    assert!((grid.query(&Point::new(0.5, 0.0, 0.02)).depth - 0.03).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn n_collinear_segments_merge_to_one(n in 2usize..40, dx in 0.01f64..2.0, y in -5.0f64..5.0) {
        let raw: Vec<_> = (0..n).map(|i| seg([i as f64 * dx, y, 0.], [(i + 1) as f64 * dx, y, 0.])).collect();
        let out = process_edges(&raw, &concat(5.0));
        prop_assert_eq!(out.len(), 1);
        prop_assert!((out[0].length() - n as f64 * dx).abs() < 1e-9);
    }

    #[test]
    fn grid_query_is_oracle_exact(px in -1.0f64..2.0, py in -1.0f64..2.0, pz in -0.3f64..0.3, r in 0.01f64..0.3) {
        let edges = [seg([0., 0., 0.], [1., 0., 0.]), seg([1., 0., 0.], [1., 1., 0.1]), seg([0., 1., 0.], [0.2, 0.3, 0.])];
        let grid = CylinderGrid::build(&edges, r, 8).unwrap();
        let p = Point::new(px, py, pz);
        let o = oracle_penetration(&edges, r, &[p]);
        prop_assert!((grid.query(&p).offset - o[0].offset).norm() < 1e-12);
    }
}
