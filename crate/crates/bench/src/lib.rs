//! Timing suites for the accelerated paths, each paired with an oracle check
//! on a subsample of the same work.
//!
//! ```
//! let reports = tp_bench::run_bench("penetration", &[3_000], &tp_bench::BenchOptions::quick()).unwrap();
//! assert_eq!(reports[0].oracle_deviation, Some(0.0));
//! ```

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use terrain_perception::command::{disk_heights, sample_flat_patches, DiskPattern, PatchConfig, SampleBounds};
use terrain_perception::geometry::{Point, Vector};
use terrain_perception::mesh::{generate_terrain, TerrainSpec, TriMesh};
use terrain_perception::oracle::{oracle_penetration, oracle_raycast};
use terrain_perception::penalty::{FootState, VolumePointSet};
use terrain_perception::pipeline::{fsim_apply_seeded, SimPipelineConfig};
use terrain_perception::render::{render_depth, CameraModel, RenderConfig, Scene, RAY_EPSILON};
use terrain_perception::{Session, SessionConfig};

/// Cells per side of the rough benchmark terrain: 2·223² = 99 458 triangles.
pub const ROUGH_CELLS: u32 = 223;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown suite '{0}' (expected depth, penetration, raycast or patches)")]
    UnknownSuite(String),
    #[error("size must be positive")]
    ZeroSize,
    #[error("at least one timed run is required")]
    NoRuns,
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("setup failed: {0}")]
    Setup(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Render plus simulated pipeline for one `size × size/2` frame.
    Depth,
    /// `size` volume-point penetration queries through the batch API.
    Penetration,
    /// `size` random rays against the rough terrain.
    Raycast,
    /// Flat-patch sampling of `size` patches on stairs.
    Patches,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Depth, Suite::Penetration, Suite::Raycast, Suite::Patches];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Depth => "depth",
            Suite::Penetration => "penetration",
            Suite::Raycast => "raycast",
            Suite::Patches => "patches",
        }
    }

    fn unit(self) -> &'static str {
        match self {
            Suite::Depth => "frames/s",
            Suite::Penetration => "queries/s",
            Suite::Raycast => "rays/s",
            Suite::Patches => "patches/s",
        }
    }
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| BenchError::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    /// Timed runs after one warm-up run; the median is reported.
    pub runs: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Work items checked against the oracle per suite.
    pub oracle_samples: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            runs: 7,
            threads: None,
            oracle_samples: 256,
            seed: 0,
        }
    }
}

impl BenchOptions {
    /// Five runs with a small oracle subsample, for smoke tests.
    pub fn quick() -> Self {
        Self {
            runs: 5,
            oracle_samples: 32,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub suite: Suite,
    pub size: usize,
    pub workers: usize,
    pub runs: usize,
    /// Median wall time of one run (ms).
    pub median_ms: f64,
    pub min_ms: f64,
    /// Work items per second at the median.
    pub throughput: f64,
    pub unit: &'static str,
    /// Largest difference from the oracle on the checked subsample; `None`
    /// when nothing was checked.
    pub oracle_deviation: Option<f64>,
    pub oracle_checked: usize,
}

/// Runs `suite` once per entry of `sizes`. An empty size list yields an
/// empty report.
pub fn run_bench(suite: &str, sizes: &[usize], opts: &BenchOptions) -> Result<Vec<BenchReport>, BenchError> {
    let suite: Suite = suite.parse()?;
    if opts.runs == 0 {
        return Err(BenchError::NoRuns);
    }
    if sizes.contains(&0) {
        return Err(BenchError::ZeroSize);
    }
    if sizes.is_empty() {
        return Ok(Vec::new());
    }
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| BenchError::Pool(e.to_string()))?
            .install(|| run_suite(suite, sizes, opts)),
        None => run_suite(suite, sizes, opts),
    }
}

fn run_suite(suite: Suite, sizes: &[usize], opts: &BenchOptions) -> Result<Vec<BenchReport>, BenchError> {
    sizes
        .iter()
        .map(|&size| match suite {
            Suite::Depth => depth(size, opts),
            Suite::Penetration => penetration(size, opts),
            Suite::Raycast => raycast(size, opts),
            Suite::Patches => patches(size, opts),
        })
        .collect()
}

/// Warm-up plus `runs` timed calls; returns sorted run times in ms.
fn time_runs(runs: usize, mut f: impl FnMut()) -> Vec<f64> {
    f();
    let mut times: Vec<f64> = (0..runs)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn report(suite: Suite, size: usize, items: f64, times: &[f64], deviation: Option<f64>, checked: usize) -> BenchReport {
    let median_ms = median(times);
    BenchReport {
        suite,
        size,
        workers: rayon::current_num_threads(),
        runs: times.len(),
        median_ms,
        min_ms: times[0],
        throughput: items / (median_ms * 1e-3),
        unit: suite.unit(),
        oracle_deviation: deviation,
        oracle_checked: checked,
    }
}

/// Rough terrain of just under 100k triangles.
pub fn rough_terrain() -> TriMesh {
    generate_terrain(&TerrainSpec::Rough {
        size: 4.0,
        cells: ROUGH_CELLS,
        amplitude: 0.08,
        seed: 7,
    })
    .expect("rough terrain")
}

/// Head camera 0.5 m above the terrain, pitched 30° down, 87° hFOV.
pub fn head_camera(width: usize, height: usize) -> CameraModel {
    let eye = Point::new(-1.0, 0.0, 0.55);
    let target = eye + Vector::new(1.0, 0.0, -(30f64.to_radians().tan()));
    let q = CameraModel::look_at_orientation(&eye, &target, &Vector::z());
    CameraModel::from_fov(width, height, 87f64.to_radians(), eye, q)
}

fn depth(size: usize, opts: &BenchOptions) -> Result<BenchReport, BenchError> {
    let scene = Scene::from_mesh(&rough_terrain());
    let cam = head_camera(size, (size / 2).max(1));
    let rcfg = RenderConfig::default();
    let sim = SimPipelineConfig::default();
    let mut seed = opts.seed;
    let times = time_runs(opts.runs, || {
        let d = render_depth(&scene, &cam, &rcfg).expect("render");
        std::hint::black_box(fsim_apply_seeded(&d, &sim, seed).expect("fsim"));
        seed = seed.wrapping_add(1);
    });
    let radial = terrain_perception::render::raycast_radial(&scene, &cam, &rcfg).map_err(|e| BenchError::Setup(e.to_string()))?;
    let n = cam.width * cam.height;
    let picks: Vec<usize> = subsample(n, opts.oracle_samples, opts.seed);
    let rays: Vec<_> = picks
        .iter()
        .map(|&i| (cam.position, cam.ray(i % cam.width, i / cam.width)))
        .collect();
    let want = oracle_raycast(&scene, &rays, rcfg.min_distance);
    let dev = picks
        .iter()
        .zip(&want)
        .map(|(&i, w)| match w {
            Some(d) if radial.valid[i] => (radial.values[i] - d).abs(),
            None if !radial.valid[i] => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    Ok(report(Suite::Depth, size, 1.0, &times, (!picks.is_empty()).then_some(dev), picks.len()))
}

fn stairs_session() -> Result<Session, BenchError> {
    let mesh = generate_terrain(&TerrainSpec::stairs(5, 0.15, 0.3)).map_err(|e| BenchError::Setup(e.to_string()))?;
    let cfg = SessionConfig {
        patches: PatchConfig {
            radius: 0.1,
            count: 4,
            ..PatchConfig::default()
        },
        ..SessionConfig::default()
    };
    Session::create(mesh, cfg, VolumePointSet::default_foot()).map_err(|e| BenchError::Setup(e.to_string()))
}

fn penetration(size: usize, opts: &BenchOptions) -> Result<BenchReport, BenchError> {
    let session = stairs_session()?;
    let p = session.foot().len();
    let feet = size.div_ceil(p);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut poses = Vec::with_capacity(feet * 7);
    let mut twists = Vec::with_capacity(feet * 6);
    for _ in 0..feet {
        let yaw: f64 = rng.random_range(-3.1..3.1);
        let (s, c) = (0.5 * yaw).sin_cos();
        poses.extend([
            rng.random_range(0.8f32..2.8),
            rng.random_range(-0.9f32..0.9),
            rng.random_range(-0.05f32..0.8),
            c as f32,
            0.0,
            0.0,
            s as f32,
        ]);
        twists.extend((0..6).map(|_| rng.random_range(-1.0f32..1.0)));
    }
    let times = time_runs(opts.runs, || {
        std::hint::black_box(session.batch_penetration(&poses, &twists).expect("penetration"));
    });
    let (_, offsets) = session.batch_penetration(&poses, &twists).map_err(|e| BenchError::Setup(e.to_string()))?;
    let radius = session.config().edges.cylinder_radius;
    let mut dev = 0.0f64;
    let picks = subsample(feet * p, opts.oracle_samples, opts.seed);
    for &q in &picks {
        let (foot, k) = (q / p, q % p);
        let pose: [f64; 7] = std::array::from_fn(|j| poses[foot * 7 + j] as f64);
        let state = FootState::from_arrays(&pose, &[0.0; 6]).map_err(|e| BenchError::Setup(e.to_string()))?;
        let world = state.world_point(&session.foot().points()[k]);
        let want = oracle_penetration(&session.edges().merged, radius, &[world])[0].offset;
        for axis in 0..3 {
            dev = dev.max((offsets[q * 3 + axis] - want[axis] as f32).abs() as f64);
        }
    }
    Ok(report(Suite::Penetration, size, (feet * p) as f64, &times, (!picks.is_empty()).then_some(dev), picks.len()))
}

fn random_rays(scene: &Scene, n: usize, seed: u64) -> Vec<(Point, Vector)> {
    let b = scene.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let o = Point::new(
                rng.random_range(b.min.x..b.max.x),
                rng.random_range(b.min.y..b.max.y),
                b.max.z + rng.random_range(0.1..1.0),
            );
            let d = Vector::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), -rng.random_range(0.2..1.0));
            (o, d.normalize())
        })
        .collect()
}

fn raycast(size: usize, opts: &BenchOptions) -> Result<BenchReport, BenchError> {
    use rayon::prelude::*;
    let scene = Scene::from_mesh(&rough_terrain());
    let rays = random_rays(&scene, size, opts.seed);
    let cast = |r: &(Point, Vector)| scene.cast(&r.0, &r.1, RAY_EPSILON).map(|h| h.distance);
    let times = time_runs(opts.runs, || {
        std::hint::black_box(rays.par_iter().map(cast).collect::<Vec<_>>());
    });
    let picks = subsample(size, opts.oracle_samples, opts.seed);
    let chosen: Vec<_> = picks.iter().map(|&i| rays[i]).collect();
    let want = oracle_raycast(&scene, &chosen, RAY_EPSILON);
    let dev = chosen
        .iter()
        .zip(&want)
        .map(|(r, w)| match (cast(r), w) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    Ok(report(Suite::Raycast, size, size as f64, &times, (!picks.is_empty()).then_some(dev), picks.len()))
}

fn patches(size: usize, opts: &BenchOptions) -> Result<BenchReport, BenchError> {
    let scene = Scene::from_mesh(&generate_terrain(&TerrainSpec::stairs(5, 0.15, 0.3)).map_err(|e| BenchError::Setup(e.to_string()))?);
    let cfg = PatchConfig {
        radius: 0.1,
        count: size,
        max_attempts: 100 * size.max(100),
        seed: opts.seed,
        ..PatchConfig::default()
    };
    let bounds = SampleBounds::inside(&scene, &cfg);
    let run = || sample_flat_patches(&scene, &cfg, &bounds);
    let found = run().map_err(|e| BenchError::Setup(e.to_string()))?;
    let times = time_runs(opts.runs, || {
        std::hint::black_box(run().expect("patches"));
    });
    // Deviation: worst amount by which a dense ray disk exceeds δ.
    let dense = DiskPattern { rings: 10, per_ring: 17 };
    let picks = subsample(found.len(), opts.oracle_samples, opts.seed);
    let mut dev = 0.0f64;
    for &i in &picks {
        let p = found[i];
        let excess = match disk_heights(&scene, p.x, p.y, cfg.radius, &dense) {
            Some(h) => {
                let span = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - h.iter().cloned().fold(f64::INFINITY, f64::min);
                (span - cfg.max_height_diff).max(0.0)
            }
            None => f64::INFINITY,
        };
        dev = dev.max(excess);
    }
    Ok(report(Suite::Patches, size, size as f64, &times, (!picks.is_empty()).then_some(dev), picks.len()))
}

/// Up to `k` distinct indices below `n`, evenly spread with a seeded offset.
fn subsample(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let k = k.min(n);
    let offset = (seed as usize) % (n / k);
    (0..k).map(|i| i * (n / k) + offset).collect()
}

/// One JSON object per line.
pub fn to_json_lines(reports: &[BenchReport]) -> String {
    reports
        .iter()
        .map(|r| serde_json::to_string(r).expect("report serializes") + "\n")
        .collect()
}

pub fn render_table(reports: &[BenchReport]) -> String {
    let mut out = format!(
        "{:<12} {:>9} {:>7} {:>11} {:>11} {:>14} {:<10} {:>12}\n",
        "suite", "size", "workers", "median ms", "min ms", "throughput", "unit", "oracle dev"
    );
    for r in reports {
        let dev = r.oracle_deviation.map_or("-".to_string(), |d| format!("{d:.3e}"));
        let _ = writeln!(
            out,
            "{:<12} {:>9} {:>7} {:>11.3} {:>11.3} {:>14.1} {:<10} {:>12}",
            r.suite.name(),
            r.size,
            r.workers,
            r.median_ms,
            r.min_ms,
            r.throughput,
            r.unit,
            dev
        );
    }
    out
}
