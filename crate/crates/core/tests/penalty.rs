mod common;

use nalgebra::{Isometry3, UnitQuaternion};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use terrain_perception::edges::{detect, CylinderGrid, EdgeDetectConfig, EdgeSegment};
use terrain_perception::geometry::{point_segment_distance, Point, Vector};
use terrain_perception::mesh::{generate_terrain, TerrainSpec};
use terrain_perception::oracle::oracle_penetration;
use terrain_perception::penalty::{
    evaluate, evaluate_batch, landing_area, query_penetrations, rvol_penalty, FootState, PenaltyConfig, VolumePointSet,
    DEFAULT_SUPPORT_TOLERANCE,
};
use terrain_perception::render::Scene;

fn random_states(rng: &mut ChaCha8Rng, n: usize, lo: Point, hi: Point) -> Vec<FootState> {
    (0..n)
        .map(|_| FootState {
            position: Point::new(
                rng.random_range(lo.x..hi.x),
                rng.random_range(lo.y..hi.y),
                rng.random_range(lo.z..hi.z),
            ),
            orientation: UnitQuaternion::from_euler_angles(
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(-3.1..3.1),
            ),
            linear_velocity: Vector::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)),
            angular_velocity: Vector::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)),
        })
        .collect()
}

#[test]
fn foot_queries_match_oracle_on_stairs() {
    let mesh = common::stairs();
    let cfg = EdgeDetectConfig::default();
    let out = detect(&mesh, &cfg).unwrap();
    let grid = out.grid.unwrap();
    let foot = VolumePointSet::default_foot();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // 334 feet × 30 points ≈ 10⁴ query points.
    let states = random_states(&mut rng, 334, Point::new(0.8, -0.9, -0.05), Point::new(2.8, 0.9, 0.8));
    let fast = query_penetrations(&grid, &states, &foot);
    let mut touching = 0;
    for (s, offsets) in states.iter().zip(&fast) {
        let world: Vec<Point> = foot.points().iter().map(|o| s.world_point(o)).collect();
        let slow = oracle_penetration(&out.edges.merged, cfg.cylinder_radius, &world);
        for (f, o) in offsets.iter().zip(&slow) {
            assert!((f - o.offset).norm() < 1e-9);
            touching += (o.depth > 0.0) as usize;
        }
    }
    assert!(touching > 100, "only {touching} penetrating points");
}

#[test]
fn single_capsule_closed_form() {
    let e = EdgeSegment::new(Point::new(-1.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0)).unwrap();
    let r = 0.04;
    let grid = CylinderGrid::build(&[e], r, 16).unwrap();
    let foot = VolumePointSet::default_foot();
    let cfg = PenaltyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for s in random_states(&mut rng, 200, Point::new(-0.5, -0.15, -0.08), Point::new(0.5, 0.15, 0.05)) {
        let got = evaluate(Some(&grid), &s, &foot, &cfg);
        let want: f64 = foot
            .points()
            .iter()
            .map(|o| {
                let depth = (r - point_segment_distance(&s.world_point(o), &e.a, &e.b)).max(0.0);
                -depth * (s.point_velocity(o).norm() + 1e-3)
            })
            .sum();
        assert!((got.r_vol - want).abs() < 1e-12, "{} vs {want}", got.r_vol);
        assert!(got.r_vol <= 0.0);
        assert_eq!(got.r_vol == 0.0, got.per_point.iter().all(|(d, _)| d.norm() == 0.0));
    }
}

#[test]
fn frame_invariance_about_z() {
    let mesh = common::stairs();
    let foot = VolumePointSet::default_foot();
    let cfg = EdgeDetectConfig::default();
    let grid = detect(&mesh, &cfg).unwrap().grid.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let states = random_states(&mut rng, 300, Point::new(0.8, -0.9, -0.05), Point::new(2.8, 0.9, 0.8));
    for angle in [0.3, 1.7, -2.4] {
        let rot = Isometry3::rotation(Vector::z() * angle);
        let turned = detect(&mesh.transformed(&rot), &cfg).unwrap().grid.unwrap();
        for s in &states {
            let moved = FootState {
                position: rot * s.position,
                orientation: rot.rotation * s.orientation,
                linear_velocity: rot * s.linear_velocity,
                angular_velocity: rot * s.angular_velocity,
            };
            let a = evaluate(Some(&grid), s, &foot, &PenaltyConfig::default()).r_vol;
            let b = evaluate(Some(&turned), &moved, &foot, &PenaltyConfig::default()).r_vol;
            assert!((a - b).abs() < 1e-9, "angle {angle}: {a} vs {b}");
        }
    }
}

#[test]
fn batch_is_bit_deterministic() {
    let grid = detect(&common::stairs(), &EdgeDetectConfig::default()).unwrap().grid.unwrap();
    let foot = VolumePointSet::default_foot();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let states = random_states(&mut rng, 2000, Point::new(0.8, -0.9, -0.05), Point::new(2.8, 0.9, 0.8));
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| evaluate_batch(Some(&grid), &states, &foot, &PenaltyConfig::default()))
    };
    let base = run(1);
    for threads in [2, 8] {
        let again = run(threads);
        assert!(base.iter().zip(&again).all(|(a, b)| a.r_vol.to_bits() == b.r_vol.to_bits()));
    }
    for (s, r) in states.iter().zip(&base) {
        assert_eq!(r, &evaluate(Some(&grid), s, &foot, &PenaltyConfig::default()));
    }
}

#[test]
fn landing_area_examples() {
    let tol = DEFAULT_SUPPORT_TOLERANCE;
    let foot = VolumePointSet::default_foot();
    let flat = Scene::from_mesh(&generate_terrain(&TerrainSpec::flat(2.0, 2.0)).unwrap());
    let at = |x, y, z| FootState::at_rest(Point::new(x, y, z), UnitQuaternion::identity());
    assert_eq!(landing_area(&flat, &at(0.0, 0.0, 0.0), &foot, tol), 1.0);
    assert_eq!(landing_area(&flat, &at(0.0, 0.0, 0.3), &foot, tol), 0.0);

    let gap = Scene::from_mesh(&generate_terrain(&TerrainSpec::gap(0.6)).unwrap());
    assert_eq!(landing_area(&gap, &at(2.3, 0.0, 0.0), &foot, tol), 0.0);

    let boxed = Scene::from_mesh(&generate_terrain(&TerrainSpec::boxed(0.3, 1.0)).unwrap());
    let even = VolumePointSet::grid([0.22, 0.08, 0.04], [6, 3, 2]).unwrap();
    let half = landing_area(&boxed, &at(0.5, 0.0, 0.3), &even, tol);
    assert!((half - 0.5).abs() <= 1.0 / even.len() as f64, "{half}");
}

#[test]
fn landing_area_shrinks_toward_the_gap() {
    let gap = Scene::from_mesh(&generate_terrain(&TerrainSpec::gap(0.6)).unwrap());
    let foot = VolumePointSet::default_foot();
    let yaw = UnitQuaternion::from_euler_angles(0.0, 0.0, 0.2);
    let mut prev = f64::INFINITY;
    let mut seen = Vec::new();
    for k in 0..=80 {
        let x = 1.5 + k as f64 * 0.01;
        let a = landing_area(&gap, &FootState::at_rest(Point::new(x, 0.1, 0.0), yaw), &foot, DEFAULT_SUPPORT_TOLERANCE);
        assert!(a <= prev, "landing area grew at x={x}");
        prev = a;
        seen.push(a);
    }
    assert_eq!(seen[0], 1.0);
    assert_eq!(*seen.last().unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn doubling_depths_doubles_the_penalty(
        pts in prop::collection::vec((-0.05f64..0.05, -0.05f64..0.05, -0.05f64..0.05, 0.0f64..4.0), 1..40)
    ) {
        let d: Vec<Vector> = pts.iter().map(|&(x, y, z, _)| Vector::new(x, y, z)).collect();
        let v: Vec<Vector> = pts.iter().map(|&(x, _, z, s)| Vector::new(s, x, z)).collect();
        let cfg = PenaltyConfig::default();
        let one = rvol_penalty(&d, &v, &cfg).unwrap();
        let two = rvol_penalty(&d.iter().map(|x| x * 2.0).collect::<Vec<_>>(), &v, &cfg).unwrap();
        prop_assert_eq!(two, 2.0 * one);
        prop_assert!(one <= 0.0);

        let still = vec![Vector::zeros(); d.len()];
        let floor = rvol_penalty(&d, &still, &cfg).unwrap();
        let expected = -cfg.epsilon * d.iter().map(|x| x.norm()).sum::<f64>();
        prop_assert!((floor - expected).abs() <= 1e-15 * expected.abs().max(1e-300));
    }
}
