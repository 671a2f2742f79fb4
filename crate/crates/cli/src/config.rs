//! Optional settings file. Flags given on the command line win over it.

use std::path::Path;

use serde::Deserialize;
use terrain_perception::{EdgeDetectConfig, PatchConfig, PenaltyConfig, RealPipelineConfig, SimPipelineConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub edges: EdgeDetectConfig,
    pub patches: PatchConfig,
    pub penalty: PenaltyConfig,
    pub sim: SimPipelineConfig,
    pub real: RealPipelineConfig,
    /// Landing-area support tolerance (m).
    pub support_tolerance: Option<f64>,
    /// Volume-point lattice of the foot box.
    pub foot_grid: Option<[usize; 3]>,
}

impl FileConfig {
    /// Reads TOML when the extension is `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let cfg: FileConfig = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        };
        cfg.sim.validate().map_err(CliError::input)?;
        cfg.real.validate().map_err(CliError::input)?;
        cfg.penalty.validate().map_err(CliError::input)?;
        Ok(cfg)
    }
}
