use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const TOP_HELP: &str = "\
Exit status:
  0  success
  1  output could not be written
  2  input error: bad flag, unreadable or malformed file
  3  empty mesh
  4  patch attempt budget exhausted

Config file (--config, TOML when the name ends in .toml, JSON otherwise):
  seed, threads, support_tolerance (m), foot_grid ([nx, ny, nz])
  [edges]    sharpness_threshold (rad), cylinder_radius (m), grid_resolution, concat
  [patches]  radius (m), max_height_diff (m), count, max_attempts, pattern
  [penalty]  epsilon (m/s)
  [sim]      simulated depth pipeline
  [real]     real depth pipeline
Flags on the command line override the file.

Mesh formats are chosen by extension: .obj (ASCII), .stl (binary), .tpm (native TPM1).";

#[derive(Debug, Parser)]
#[command(name = "tperc", version, about = "Terrain perception and foothold-safety toolkit", after_long_help = TOP_HELP)]
pub struct Cli {
    /// RNG seed for every random step; runs with the same seed are bit-identical.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Settings file (TOML or JSON) merged under the command-line flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads [default: available parallelism].
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    Edges(EdgesArgs),
    Depth(DepthArgs),
    Patches(PatchesArgs),
    Penalty(PenaltyArgs),
    Bench(BenchArgs),
    Terrain(TerrainArgs),
    Stream(StreamArgs),
}

const EDGES_HELP: &str = "\
Output (--out): a .tpe name writes TPE1 binary (magic \"TPE1\", u32 count, then six
little-endian f32 per segment: ax ay az bx by bz); any other name writes a JSON
array of {\"a\": [x, y, z], \"b\": [x, y, z]} in meters.

Prints the raw count, final count and reduction ratio (raw / final), or
\"0 edges\" when the mesh has no sharp edge.";

/// Detect sharp edges, merge them and report the reduction.
#[derive(Debug, Args)]
#[command(after_long_help = EDGES_HELP)]
pub struct EdgesArgs {
    /// Terrain mesh (.obj, .stl or .tpm).
    #[arg(long, value_name = "PATH")]
    pub mesh: PathBuf,
    /// Sharpness threshold τ (rad) on the dihedral angle [default: 0.5236].
    #[arg(long, value_name = "RAD")]
    pub tau: Option<f64>,
    /// Capsule radius around each edge (m) [default: 0.04].
    #[arg(long, value_name = "M")]
    pub radius: Option<f64>,
    /// Collision grid cells per axis [default: 64].
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    /// Edge file to write (JSON, or TPE1 for a .tpe name).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write the unmerged edges instead of the merged ones.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineKind {
    /// Noise, artifacts, blur, clip and normalize (uses --seed).
    Sim,
    /// Inpaint invalid or zero pixels, blur, clip and normalize.
    Real,
    /// Raw orthogonal depth in meters.
    None,
}

const DEPTH_HELP: &str = "\
Camera JSON (--camera, a file path or an inline object):
  width, height        pixels
  position             [x, y, z] optical center (m)
  look_at              [x, y, z] world point on the principal axis, or
  orientation_wxyz     [w, x, y, z] camera-to-world quaternion, optical frame
                       (x right, y down, z forward)
  hfov_deg             horizontal field of view (degrees), or
  fx, fy, cx, cy       pinhole intrinsics (pixels)

Output: <STEM>.json holds {\"width\", \"height\", \"unit\"} with unit \"m\" or
\"normalized\"; <STEM>.f32 holds width*height little-endian f32 values row by
row. Invalid metric pixels are stored as -1.";

/// Render a depth frame and run it through a pipeline.
#[derive(Debug, Args)]
#[command(after_long_help = DEPTH_HELP)]
pub struct DepthArgs {
    /// Terrain mesh (.obj, .stl or .tpm) to render.
    #[arg(long, value_name = "PATH", required_unless_present = "input", conflicts_with = "input")]
    pub mesh: Option<PathBuf>,
    /// Recorded metric frame (<STEM>.json + <STEM>.f32) used instead of rendering.
    #[arg(long, value_name = "STEM")]
    pub input: Option<PathBuf>,
    /// Camera description, file path or inline JSON (required with --mesh).
    #[arg(long, value_name = "JSON")]
    pub camera: Option<String>,
    /// Pipeline applied after rendering.
    #[arg(long, value_enum, default_value_t = PipelineKind::Sim)]
    pub pipeline: PipelineKind,
    /// Output stem; writes <STEM>.json and <STEM>.f32.
    #[arg(long, value_name = "STEM")]
    pub out: PathBuf,
}

const PATCHES_HELP: &str = "\
Output: JSON array of [x, y, z] patch centers (m), z being the mean sampled
height. Exits with status 4 when the attempt budget runs out first.";

/// Sample flat target patches on a terrain.
#[derive(Debug, Args)]
#[command(after_long_help = PATCHES_HELP)]
pub struct PatchesArgs {
    /// Terrain mesh (.obj, .stl or .tpm).
    #[arg(long, value_name = "PATH")]
    pub mesh: PathBuf,
    /// Disk radius r (m) [default: 0.3].
    #[arg(long, value_name = "M")]
    pub radius: Option<f64>,
    /// Maximum height spread δ inside the disk (m), exclusive [default: 0.05].
    #[arg(long, value_name = "M")]
    pub delta: Option<f64>,
    /// Number of patches N [default: 16].
    #[arg(long, value_name = "N")]
    pub count: Option<usize>,
    /// Candidate budget before giving up [default: 10000].
    #[arg(long, value_name = "N")]
    pub max_attempts: Option<usize>,
    /// Patch file to write; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

const PENALTY_HELP: &str = "\
Trajectory CSV (--traj), one header row then one row per step, 14 columns:
  t                     time (s)
  x, y, z               foot position (m)
  qw, qx, qy, qz        foot orientation quaternion (normalized on read)
  vx, vy, vz            linear velocity (m/s), world frame
  wx, wy, wz            angular velocity (rad/s), world frame

Output CSV (--out): t, r_vol, landing_area; one row per input row.
r_vol is the volumetric penalty (<= 0); landing_area is the fraction of the
foot's volume points with terrain under their sole projection.";

/// Per-step volumetric penalty and landing area along a foot trajectory.
#[derive(Debug, Args)]
#[command(after_long_help = PENALTY_HELP)]
pub struct PenaltyArgs {
    /// Terrain mesh (.obj, .stl or .tpm).
    #[arg(long, value_name = "PATH")]
    pub mesh: PathBuf,
    /// Edge file (JSON or TPE1) to use instead of detecting edges on the mesh.
    #[arg(long, value_name = "PATH")]
    pub edges: Option<PathBuf>,
    /// Foot trajectory CSV.
    #[arg(long, value_name = "CSV")]
    pub traj: PathBuf,
    /// Result CSV; stdout when absent.
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
    /// Capsule radius around each edge (m) [default: 0.04].
    #[arg(long, value_name = "M")]
    pub radius: Option<f64>,
    /// Velocity floor ε in the penalty weight (m/s) [default: 0.001].
    #[arg(long, value_name = "M/S")]
    pub epsilon: Option<f64>,
    /// Landing-area support tolerance (m) [default: 0.01].
    #[arg(long, value_name = "M")]
    pub support_tol: Option<f64>,
    /// Volume-point lattice NX,NY,NZ inside the 0.22 × 0.08 × 0.04 m foot box [default: 5,3,2].
    #[arg(long, value_name = "NX,NY,NZ", value_delimiter = ',')]
    pub foot_grid: Option<Vec<usize>>,
}

const BENCH_HELP: &str = "\
Suites and their size unit:
  depth        frame width in pixels (height = width / 2), render + sim pipeline
  penetration  foot states of 30 volume points each
  raycast      rays
  patches      flat patches sampled
  all          every suite

Each report row carries the median and minimum wall time (ms), throughput in
the suite's unit per second, and the largest deviation from the exhaustive
oracle on a subsample.";

/// Time the accelerated paths and check them against their oracles.
#[derive(Debug, Args)]
#[command(after_long_help = BENCH_HELP)]
pub struct BenchArgs {
    /// Suite name: depth, penetration, raycast, patches or all.
    #[arg(long, value_name = "NAME")]
    pub suite: String,
    /// Comma-separated problem sizes.
    #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Timed runs per size.
    #[arg(long, value_name = "N", default_value_t = 7)]
    pub runs: usize,
    /// Emit JSON lines instead of a table.
    #[arg(long)]
    pub json: bool,
}

/// Generate a procedural terrain mesh.
#[derive(Debug, Args)]
#[command(after_long_help = "Lengths in meters, angles in radians. --spec takes a JSON object such as\n{\"kind\": \"stairs\", \"steps\": 5, \"rise\": 0.15, \"run\": 0.3, \"width\": 2.0, \"landing\": 1.0}.")]
pub struct TerrainArgs {
    /// Terrain kind with default parameters: flat, stairs, gap, box, rough or slope.
    #[arg(long, value_name = "KIND", required_unless_present = "spec", conflicts_with = "spec")]
    pub kind: Option<String>,
    /// Full terrain description as JSON.
    #[arg(long, value_name = "JSON")]
    pub spec: Option<String>,
    /// Mesh file to write; the format follows the extension.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

/// Run the real pipeline over a frame stream on stdin, writing to stdout.
#[derive(Debug, Args)]
#[command(after_long_help = "Each frame is a 16-byte header (magic \"TPD1\", u32 width, u32 height, u32 flags;\nflag bit 0 marks a normalized payload) followed by width*height little-endian f32\nvalues row by row. In metric frames a zero value means no reading. Output\nframes use the same layout with the normalized flag set.")]
pub struct StreamArgs {}
