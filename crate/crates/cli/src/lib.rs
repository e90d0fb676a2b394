//! Batch front end: compile scenario programs, run seeded simulations with
//! configured sensors, and write datasets; plus render/info/serve utilities.

mod generate;
mod info;
mod render;
mod serve;

pub use generate::{cmd_generate, ActionSourceSpec, GenerateSummary};
pub use info::cmd_info;
pub use render::{cmd_render, Layer};
pub use serve::cmd_serve;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use scenegen_core::dsl::{CheckedProgram, CompileError};
use scenegen_core::sensor::{CameraConfig, ConfigError, LidarConfig};
use scenegen_core::world::{WorldError, WorldModel};

/// One batch of scenario runs; the JSON config file mirrors this struct and
/// command-line flags override individual fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct BatchConfig {
    pub scenarios: Vec<PathBuf>,
    /// Overrides any `world "..."` reference inside the scenarios.
    pub world: Option<PathBuf>,
    /// Seconds of simulated time per run.
    pub duration: f64,
    pub runs_per_scenario: u32,
    pub base_seed: u64,
    pub cameras: Vec<CameraConfig>,
    pub lidars: Vec<LidarConfig>,
    pub out: PathBuf,
    pub capture_every_n_steps: u32,
    pub max_rejections: u32,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            scenarios: Vec::new(),
            world: None,
            duration: 10.0,
            runs_per_scenario: 1,
            base_seed: 1,
            cameras: vec![CameraConfig::default()],
            lidars: vec![LidarConfig::default()],
            out: PathBuf::from("dataset"),
            capture_every_n_steps: 1,
            max_rejections: scenegen_core::sampler::DEFAULT_MAX_REJECTIONS,
        }
    }
}

impl BatchConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The simulation timestep: one over the recording camera's rate.
    pub fn dt(&self) -> f64 {
        1.0 / self.cameras[0].fps
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.scenarios.is_empty() {
            return Err(CliError::Config("no scenarios given".into()));
        }
        if self.runs_per_scenario < 1 {
            return Err(CliError::Config("runsPerScenario must be at least 1".into()));
        }
        if self.capture_every_n_steps < 1 {
            return Err(CliError::Config("captureEveryNSteps must be at least 1".into()));
        }
        if self.cameras.is_empty() || self.lidars.is_empty() {
            return Err(CliError::Config(
                "the frame layout needs at least one camera and one lidar".into(),
            ));
        }
        for c in &self.cameras {
            c.validate()?;
        }
        for l in &self.lidars {
            l.validate()?;
        }
        if self.duration < self.dt() {
            return Err(CliError::Config(format!(
                "duration {} is shorter than one frame at {} fps",
                self.duration, self.cameras[0].fps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    /// Scenario failed to compile; rendered as `file:line:col: message`.
    #[error("{0}")]
    Check(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    World(#[from] WorldError),
    #[error("{0}")]
    Sensor(#[from] ConfigError),
    #[error("{0}")]
    Dataset(#[from] scenegen_core::dataset::DatasetError),
    #[error("{0}")]
    Sample(#[from] scenegen_core::sampler::SampleError),
    #[error("{0}")]
    Sim(#[from] scenegen_core::sim::SimError),
    #[error("{0}")]
    Protocol(#[from] scenegen_core::protocol::ProtocolError),
}

/// Render a compile failure as `file:line:col: message` lines.
pub fn format_compile_error(path: &Path, err: &CompileError) -> String {
    match err {
        CompileError::Check(errors) => errors
            .0
            .iter()
            .map(|e| format!("{}:{e}", path.display()))
            .collect::<Vec<_>>()
            .join("\n"),
        other => format!("{}:{other}", path.display()),
    }
}

/// Compile one scenario file.
pub fn compile_scenario(path: &Path) -> Result<CheckedProgram, CliError> {
    let text = std::fs::read_to_string(path)?;
    scenegen_core::dsl::compile(&text).map_err(|e| CliError::Check(format_compile_error(path, &e)))
}

/// Pick the world for a scenario: an explicit override first, then the
/// scenario's own `world "..."` reference (relative to the scenario file),
/// then a bare flat-ground world.
pub fn resolve_world(
    scenario_path: &Path,
    prog: &CheckedProgram,
    explicit: Option<&Path>,
) -> Result<WorldModel, CliError> {
    if let Some(path) = explicit {
        return Ok(WorldModel::load(path)?);
    }
    if let Some(rel) = prog.program.world_ref.as_deref() {
        let base = scenario_path.parent().unwrap_or(Path::new("."));
        return Ok(WorldModel::load(&base.join(rel))?);
    }
    Ok(WorldModel::flat_ground())
}
