mod common;

use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use terrain_perception::geometry::{Point, Vector};
use terrain_perception::mesh::{generate_terrain, TerrainSpec, TriMesh};
use terrain_perception::oracle::oracle_raycast;
use terrain_perception::render::{raycast_radial, render_batch, render_depth, CameraModel, RenderConfig, Scene, RAY_EPSILON};

/// Optical z along world -z.
fn down() -> UnitQuaternion<f64> {
    CameraModel::look_at_orientation(&Point::origin(), &Point::new(0.0, 0.0, -1.0), &Vector::x())
}

fn stairs_camera(w: usize, h: usize) -> CameraModel {
    let eye = Point::new(0.4, 0.2, 1.1);
    let q = CameraModel::look_at_orientation(&eye, &Point::new(1.2, 0.0, 0.3), &Vector::z());
    CameraModel::from_fov(w, h, 87f64.to_radians(), eye, q)
}

#[test]
fn bvh_equals_exhaustive_on_random_rays() {
    let meshes = [
        generate_terrain(&TerrainSpec::Rough {
            size: 4.0,
            cells: 30,
            amplitude: 0.3,
            seed: 5,
        })
        .unwrap(),
        common::stairs(),
        generate_terrain(&TerrainSpec::boxed(0.3, 1.0)).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for mesh in &meshes {
        assert!(mesh.faces().len() <= 2000);
        let scene = Scene::from_mesh(mesh);
        let b = scene.bounds().padded(0.5);
        let rays: Vec<(Point, Vector)> = (0..10_000)
            .map(|_| {
                let o = Point::new(
                    rng.random_range(b.min.x..b.max.x),
                    rng.random_range(b.min.y..b.max.y),
                    rng.random_range(b.min.z..b.max.z),
                );
                let d = Vector::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..0.3));
                (o, d.normalize())
            })
            .collect();
        let want = oracle_raycast(&scene, &rays, RAY_EPSILON);
        let mut hits = 0;
        for ((o, d), w) in rays.iter().zip(want) {
            let got = scene.cast(o, d, RAY_EPSILON).map(|h| h.distance);
            match (got, w) {
                (Some(a), Some(b)) => {
                    hits += 1;
                    assert!((a - b).abs() < 1e-9);
                }
                (None, None) => {}
                other => panic!("hit mismatch {other:?} for {o:?} {d:?}"),
            }
        }
        assert!(hits > 1000);
    }
}

#[test]
fn plane_depth_examples() {
    let plane = generate_terrain(&TerrainSpec::flat(200.0, 200.0)).unwrap();
    let scene = Scene::from_mesh(&plane);
    let cam = CameraModel::from_fov(36, 18, 90f64.to_radians(), Point::new(0.0, 0.0, 2.0), down());
    let radial = raycast_radial(&scene, &cam, &RenderConfig::default()).unwrap();
    let ortho = render_depth(&scene, &cam, &RenderConfig::default()).unwrap();
    let n = cam.principal_axis();
    for r in 0..18 {
        for c in 0..36 {
            let cos_phi = cam.ray(c, r).dot(&n);
            assert!((radial.get(c, r) - 2.0 / cos_phi).abs() < 1e-9);
            assert!((ortho.get(c, r) - 2.0).abs() < 1e-6);
        }
    }
    let one = CameraModel::from_fov(1, 1, 60f64.to_radians(), Point::new(0.0, 0.0, 2.0), down());
    assert!((render_depth(&scene, &one, &RenderConfig::default()).unwrap().values[0] - 2.0).abs() < 1e-12);
}

#[test]
fn stairs_frame_matches_exhaustive_oracle() {
    let scene = Scene::from_mesh(&common::stairs());
    let cam = stairs_camera(36, 18);
    let cfg = RenderConfig::default();
    let img = raycast_radial(&scene, &cam, &cfg).unwrap();
    let rays: Vec<_> = cam.ray_directions().into_iter().map(|d| (cam.position, d)).collect();
    let want = oracle_raycast(&scene, &rays, cfg.min_distance);
    assert!(img.valid_count() > 36 * 18 / 2);
    for (i, w) in want.iter().enumerate() {
        assert_eq!(img.valid[i], w.is_some(), "pixel {i}");
        if let Some(d) = w {
            assert!((img.values[i] - d).abs() < 1e-6);
        } else {
            assert_eq!(img.values[i], cfg.miss_value);
        }
    }
}

#[test]
fn translation_equivariance() {
    let mesh = common::stairs();
    let cam = stairs_camera(48, 24);
    let base = render_depth(&Scene::from_mesh(&mesh), &cam, &RenderConfig::default()).unwrap();
    for shift in [Vector::new(3.0, -2.0, 0.5), Vector::new(-10.0, 7.5, -4.25)] {
        let moved: TriMesh = mesh.transformed(&Isometry3::from_parts(Translation3::from(shift), UnitQuaternion::identity()));
        let img = render_depth(&Scene::from_mesh(&moved), &cam.translated(&shift), &RenderConfig::default()).unwrap();
        assert_eq!(img.valid, base.valid);
        for (a, b) in img.values.iter().zip(&base.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn watertight_over_procedural_terrains() {
    for (name, mesh) in common::terrains() {
        let scene = Scene::from_mesh(&mesh);
        let b = scene.bounds();
        // Every vertex and edge midpoint is a shared-edge or shared-vertex
        // crossing for a vertical ray.
        let mut probes: Vec<(f64, f64)> = mesh.vertices().iter().map(|v| (v.x, v.y)).collect();
        for f in mesh.faces() {
            for k in 0..3 {
                let (a, c) = (mesh.vertices()[f[k] as usize], mesh.vertices()[f[(k + 1) % 3] as usize]);
                probes.push((0.5 * (a.x + c.x), 0.5 * (a.y + c.y)));
            }
        }
        let inside = |x: f64, y: f64| x > b.min.x + 1e-9 && x < b.max.x - 1e-9 && y > b.min.y + 1e-9 && y < b.max.y - 1e-9;
        let mut checked = 0;
        for (x, y) in probes.into_iter().filter(|&(x, y)| inside(x, y)) {
            assert!(scene.height_at(x, y).is_some(), "{name}: miss at ({x}, {y})");
            checked += 1;
        }
        assert!(checked > 0);
        let c = b.center();
        let cam = CameraModel::from_fov(64, 64, 40f64.to_radians(), Point::new(c.x, c.y, b.max.z + 1.0), down());
        let img = render_depth(&scene, &cam, &RenderConfig::default()).unwrap();
        for r in 0..64 {
            for col in 0..64 {
                let d = cam.ray(col, r);
                let at = |z: f64| cam.position + d * ((cam.position.z - z) / -d.z);
                let (top, bottom) = (at(b.max.z), at(b.min.z));
                // A ray entering and leaving the height range over the footprint
                // must cross the surface.
                if inside(top.x, top.y) && inside(bottom.x, bottom.y) {
                    assert!(img.is_valid(col, r), "{name}: pixel ({col}, {r})");
                }
            }
        }
    }
}

#[test]
fn output_independent_of_worker_count() {
    let scene = Scene::from_mesh(&generate_terrain(&TerrainSpec::rough(3)).unwrap());
    let cams: Vec<_> = (0..6)
        .map(|k| stairs_camera(36, 18).translated(&Vector::new(0.1 * k as f64, 0.0, 0.0)))
        .collect();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| render_batch(&scene, &cams, &RenderConfig::default()).unwrap())
    };
    let one = run(1);
    let many = run(4);
    for (a, b) in one.iter().zip(&many) {
        assert_eq!(a.valid, b.valid);
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn downward_plane_depth_is_constant(x in -20.0f64..20.0, y in -20.0f64..20.0, h in 0.2f64..8.0, roll in 0.0f64..std::f64::consts::TAU) {
        let plane = Scene::from_mesh(&generate_terrain(&TerrainSpec::flat(400.0, 400.0)).unwrap());
        let q = UnitQuaternion::from_axis_angle(&Vector::z_axis(), roll) * down();
        let cam = CameraModel::from_fov(36, 18, 87f64.to_radians(), Point::new(x, y, h), q);
        let img = render_depth(&plane, &cam, &RenderConfig::default()).unwrap();
        prop_assert_eq!(img.valid_count(), 36 * 18);
        for v in &img.values {
            prop_assert!((v - h).abs() < 1e-6);
        }
    }
}

#[test]
fn xy_overlap_query_is_conservative() {
    let scene = Scene::from_mesh(&generate_terrain(&TerrainSpec::rough(9)).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (x, y, r) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.01..0.5));
        let (min, max) = ([x - r, y - r], [x + r, y + r]);
        let got: std::collections::BTreeSet<u32> = scene.triangles_in_xy(min, max).into_iter().collect();
        for (i, t) in scene.triangles().iter().enumerate() {
            let lo = (t.iter().map(|p| p.x).fold(f64::INFINITY, f64::min), t.iter().map(|p| p.y).fold(f64::INFINITY, f64::min));
            let hi = (t.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max), t.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max));
            if lo.0 <= max[0] && hi.0 >= min[0] && lo.1 <= max[1] && hi.1 >= min[1] {
                assert!(got.contains(&(i as u32)));
            }
        }
    }
}
