//! `tperc`: command-line front end for the terrain-perception toolkit.

mod args;
mod commands;
mod config;
mod error;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::FileConfig;
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed);
    let threads = cli.threads.or(file.threads);
    if threads == Some(0) {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Edges(a) => commands::edges(a, &file, &mut out),
        Command::Depth(a) => commands::depth(a, &file, seed),
        Command::Patches(a) => commands::patches(a, &file, seed, &mut out),
        Command::Penalty(a) => commands::penalty(a, &file, &mut out),
        Command::Bench(a) => commands::bench(a, seed, threads, &mut out),
        Command::Terrain(a) => commands::terrain(a),
        Command::Stream(_) => commands::stream(&file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = io::stdout().flush();
            eprintln!("tperc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
