use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Deserialize;
use terrain_perception::command::{patches_to_json, sample_flat_patches, CommandError, SampleBounds};
use terrain_perception::edges::io::{edges_from_bytes, edges_to_json, edges_to_tpe};
use terrain_perception::edges::{detect, CylinderGrid, EdgeSegment};
use terrain_perception::mesh::{generate_terrain, load_mesh, save_mesh, MeshError, MeshFormat, TerrainKind, TerrainSpec};
use terrain_perception::penalty::{evaluate, landing_area, FootState, VolumePointSet, DEFAULT_SUPPORT_TOLERANCE};
use terrain_perception::pipeline::stream::run_real_stream;
use terrain_perception::pipeline::{freal_apply, fsim_apply_seeded};
use terrain_perception::render::io::{read_depth, write_depth};
use terrain_perception::render::{render_depth, CameraSpec, DepthImage, RenderConfig, Scene};
use terrain_perception::TriMesh;

use crate::args::{BenchArgs, DepthArgs, EdgesArgs, PatchesArgs, PenaltyArgs, PipelineKind, TerrainArgs};
use crate::config::FileConfig;
use crate::error::CliError;

pub fn read_mesh(path: &Path) -> Result<TriMesh, CliError> {
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| CliError::Input(format!("{}: unknown mesh extension (expected .obj, .stl or .tpm)", path.display())))?;
    load_mesh(path, format).map_err(|e| match e {
        MeshError::Empty | MeshError::AllDegenerate(_) => CliError::Empty(format!("{}: {e}", path.display())),
        _ => CliError::Input(format!("{}: {e}", path.display())),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::output(path, e))
}

fn is_tpe(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tpe"))
}

pub fn edges(args: &EdgesArgs, file: &FileConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let mesh = read_mesh(&args.mesh)?;
    let mut cfg = file.edges;
    if let Some(t) = args.tau {
        cfg.sharpness_threshold = t;
    }
    if let Some(r) = args.radius {
        cfg.cylinder_radius = r;
    }
    if let Some(g) = args.grid {
        cfg.grid_resolution = g;
    }
    let found = detect(&mesh, &cfg).map_err(CliError::input)?;
    let set = &found.edges;
    if let Some(path) = &args.out {
        let chosen = if args.raw { &set.raw } else { &set.merged };
        let bytes = if is_tpe(path) {
            edges_to_tpe(chosen)
        } else {
            edges_to_json(chosen).into_bytes()
        };
        write_file(path, &bytes)?;
    }
    let w = |e: io::Error| CliError::Runtime(e.to_string());
    if set.raw.is_empty() {
        writeln!(out, "0 edges").map_err(w)?;
    } else {
        writeln!(
            out,
            "raw: {}\nfinal: {}\nreduction ratio: {:.3}",
            set.raw.len(),
            set.merged.len(),
            set.raw.len() as f64 / set.merged.len() as f64
        )
        .map_err(w)?;
    }
    Ok(())
}

fn parse_camera(text: &str) -> Result<CameraSpec, CliError> {
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        fs::read_to_string(text).map_err(|e| CliError::Input(format!("camera file {text}: {e}")))?
    };
    serde_json::from_str(&json).map_err(|e| CliError::Input(format!("camera spec: {e}")))
}

pub fn depth(args: &DepthArgs, file: &FileConfig, seed: Option<u64>) -> Result<(), CliError> {
    let raw: DepthImage = match (&args.mesh, &args.input) {
        (Some(mesh), _) => {
            let spec = parse_camera(args.camera.as_deref().ok_or_else(|| CliError::Input("--camera is required with --mesh".into()))?)?;
            let cam = spec.to_camera().map_err(|e| CliError::Input(format!("camera spec: {e}")))?;
            let scene = Scene::from_mesh(&read_mesh(mesh)?);
            render_depth(&scene, &cam, &RenderConfig::default()).map_err(CliError::input)?
        }
        (None, Some(stem)) => read_depth(stem).map_err(|e| CliError::Input(format!("{}: {e}", stem.display())))?,
        (None, None) => return Err(CliError::Input("one of --mesh or --input is required".into())),
    };
    let img = match args.pipeline {
        PipelineKind::None => raw,
        PipelineKind::Sim => fsim_apply_seeded(&raw, &file.sim, seed.unwrap_or(file.sim.seed)).map_err(CliError::input)?,
        PipelineKind::Real => freal_apply(&raw, &file.real).map_err(CliError::input)?,
    };
    write_depth(&args.out, &img).map_err(|e| CliError::output(&args.out, e))
}

pub fn patches(args: &PatchesArgs, file: &FileConfig, seed: Option<u64>, out: &mut dyn Write) -> Result<(), CliError> {
    let scene = Scene::from_mesh(&read_mesh(&args.mesh)?);
    let mut cfg = file.patches.clone();
    cfg.radius = args.radius.unwrap_or(cfg.radius);
    cfg.max_height_diff = args.delta.unwrap_or(cfg.max_height_diff);
    cfg.count = args.count.unwrap_or(cfg.count);
    cfg.max_attempts = args.max_attempts.unwrap_or(cfg.max_attempts);
    cfg.seed = seed.unwrap_or(cfg.seed);
    let found = sample_flat_patches(&scene, &cfg, &SampleBounds::inside(&scene, &cfg)).map_err(|e| match e {
        CommandError::BudgetExhausted { .. } => CliError::BudgetExhausted(e.to_string()),
        _ => CliError::input(e),
    })?;
    let json = patches_to_json(&found);
    match &args.out {
        Some(path) => write_file(path, json.as_bytes()),
        None => writeln!(out, "{json}").map_err(|e| CliError::Runtime(e.to_string())),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajRow {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    vx: f64,
    vy: f64,
    vz: f64,
    wx: f64,
    wy: f64,
    wz: f64,
}

const TRAJ_COLUMNS: [&str; 14] = ["t", "x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz"];

fn read_trajectory(path: &Path) -> Result<Vec<(f64, FootState)>, CliError> {
    let bad = |e: &dyn std::fmt::Display| CliError::Input(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| bad(&e))?;
    let header = reader.headers().map_err(|e| bad(&e))?.clone();
    if header.iter().ne(TRAJ_COLUMNS) {
        return Err(bad(&format!("header must be {}", TRAJ_COLUMNS.join(","))));
    }
    reader
        .deserialize::<TrajRow>()
        .enumerate()
        .map(|(i, row)| {
            let r = row.map_err(|e| bad(&e))?;
            let pose = [r.x, r.y, r.z, r.qw, r.qx, r.qy, r.qz];
            let twist = [r.vx, r.vy, r.vz, r.wx, r.wy, r.wz];
            let state = FootState::from_arrays(&pose, &twist).map_err(|e| bad(&format!("row {}: {e}", i + 1)))?;
            if !r.t.is_finite() {
                return Err(bad(&format!("row {}: non-finite time", i + 1)));
            }
            Ok((r.t, state))
        })
        .collect()
}

pub fn penalty(args: &PenaltyArgs, file: &FileConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let mesh = read_mesh(&args.mesh)?;
    let rows = read_trajectory(&args.traj)?;
    let mut edge_cfg = file.edges;
    edge_cfg.cylinder_radius = args.radius.unwrap_or(edge_cfg.cylinder_radius);
    let mut pen_cfg = file.penalty;
    pen_cfg.epsilon = args.epsilon.unwrap_or(pen_cfg.epsilon);
    pen_cfg.validate().map_err(CliError::input)?;
    let tol = args.support_tol.or(file.support_tolerance).unwrap_or(DEFAULT_SUPPORT_TOLERANCE);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Input(format!("support tolerance {tol} must be positive")));
    }
    let lattice = match args.foot_grid.as_deref() {
        Some(&[nx, ny, nz]) => Some([nx, ny, nz]),
        Some(other) => return Err(CliError::Input(format!("--foot-grid needs 3 counts, got {}", other.len()))),
        None => file.foot_grid,
    };
    let foot = match lattice {
        Some(n) => VolumePointSet::grid(VolumePointSet::default_foot().size(), n).map_err(CliError::input)?,
        None => VolumePointSet::default_foot(),
    };
    let grid: Option<CylinderGrid> = match &args.edges {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let list: Vec<EdgeSegment> = edges_from_bytes(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            if list.is_empty() {
                None
            } else {
                Some(CylinderGrid::build(&list, edge_cfg.cylinder_radius, edge_cfg.grid_resolution).map_err(CliError::input)?)
            }
        }
        None => detect(&mesh, &edge_cfg).map_err(CliError::input)?.grid,
    };
    let scene = Scene::from_mesh(&mesh);
    let mut sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(fs::File::create(path).map_err(|e| CliError::output(path, e))?),
        None => Box::new(&mut *out),
    };
    let mut w = csv::Writer::from_writer(&mut sink);
    let fail = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record(["t", "r_vol", "landing_area"]).map_err(fail)?;
    for (t, state) in &rows {
        // Adding zero folds -0 into 0.
        let r = evaluate(grid.as_ref(), state, &foot, &pen_cfg).r_vol + 0.0;
        let area = landing_area(&scene, state, &foot, tol);
        w.write_record([t.to_string(), r.to_string(), area.to_string()]).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn bench(args: &BenchArgs, seed: Option<u64>, threads: Option<usize>, out: &mut dyn Write) -> Result<(), CliError> {
    let opts = tp_bench::BenchOptions {
        runs: args.runs,
        threads,
        seed: seed.unwrap_or(0),
        ..tp_bench::BenchOptions::default()
    };
    let suites: Vec<&str> = if args.suite == "all" {
        tp_bench::Suite::ALL.iter().map(|s| s.name()).collect()
    } else {
        vec![args.suite.as_str()]
    };
    let mut reports = Vec::new();
    for s in suites {
        reports.extend(tp_bench::run_bench(s, &args.sizes, &opts).map_err(|e| match e {
            tp_bench::BenchError::UnknownSuite(_) | tp_bench::BenchError::ZeroSize | tp_bench::BenchError::NoRuns => CliError::input(e),
            _ => CliError::Runtime(e.to_string()),
        })?);
    }
    let text = if args.json {
        tp_bench::to_json_lines(&reports)
    } else {
        tp_bench::render_table(&reports)
    };
    out.write_all(text.as_bytes()).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn terrain(args: &TerrainArgs) -> Result<(), CliError> {
    let spec = match (&args.kind, &args.spec) {
        (_, Some(json)) => serde_json::from_str::<TerrainSpec>(json).map_err(|e| CliError::Input(format!("terrain spec: {e}")))?,
        (Some(kind), None) => TerrainSpec::default_for(kind.parse::<TerrainKind>().map_err(CliError::input)?),
        (None, None) => return Err(CliError::Input("one of --kind or --spec is required".into())),
    };
    let format = MeshFormat::from_path(&args.out)
        .ok_or_else(|| CliError::Input(format!("{}: unknown mesh extension (expected .obj, .stl or .tpm)", args.out.display())))?;
    let mesh = generate_terrain(&spec).map_err(CliError::input)?;
    save_mesh(&mesh, &args.out, format).map_err(|e| CliError::output(&args.out, e))
}

pub fn stream(file: &FileConfig) -> Result<(), CliError> {
    let (stdin, stdout) = (io::stdin(), io::stdout());
    run_real_stream(&mut stdin.lock(), &mut stdout.lock(), &file.real)
        .map(|_| ())
        .map_err(CliError::input)
}
