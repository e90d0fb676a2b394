//! The batch generate pipeline: sample, simulate, capture, write.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use scenegen_core::annotate::{boxes_3d, intrinsics, project_box, LidarToCam};
use scenegen_core::dataset::{
    class_table, FrameData, FrameStates, RunManifest, RunWriter, SensorRig, FORMAT_VERSION,
};
use scenegen_core::dsl::CheckedProgram;
use scenegen_core::protocol::{SocketActionSource, WireAction, WireAgentState};
use scenegen_core::rng::splitmix64;
use scenegen_core::sampler::sample_scene_traced;
use scenegen_core::sensor::{render_camera, sweep_lidar};
use scenegen_core::sim::{run_simulation, ActionSource, BehaviorRuntime, FrameSnapshot};
use scenegen_core::world::WorldModel;

use crate::{BatchConfig, CliError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionSourceSpec {
    InProcess,
    /// `host:port` of a running behavior server; each run consumes one
    /// server session.
    Tcp(String),
}

impl ActionSourceSpec {
    /// Parse `tcp://host:port` or default to the in-process runtime.
    pub fn parse(s: Option<&str>) -> Result<Self, CliError> {
        match s {
            None => Ok(ActionSourceSpec::InProcess),
            Some(s) => match s.strip_prefix("tcp://") {
                Some(addr) => Ok(ActionSourceSpec::Tcp(addr.to_string())),
                None => Err(CliError::Config(format!(
                    "action source must look like tcp://host:port, got {s}"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateSummary {
    pub runs: usize,
    pub ok: usize,
    pub failed: usize,
}

impl GenerateSummary {
    pub fn line(&self) -> String {
        format!("runs={} ok={} failed={}", self.runs, self.ok, self.failed)
    }
}

/// Run the whole batch. Scenarios must all compile before anything runs;
/// individual run failures are reported and skipped.
pub fn cmd_generate(
    config: &BatchConfig,
    source: &ActionSourceSpec,
) -> Result<GenerateSummary, CliError> {
    config.validate()?;

    let mut compiled = Vec::new();
    for path in &config.scenarios {
        let prog = crate::compile_scenario(path)?;
        let world = crate::resolve_world(path, &prog, config.world.as_deref())?;
        compiled.push((path.clone(), prog, world));
    }

    let mut summary = GenerateSummary {
        runs: 0,
        ok: 0,
        failed: 0,
    };
    for (path, prog, world) in &compiled {
        for j in 0..config.runs_per_scenario {
            summary.runs += 1;
            let seed = splitmix64((config.base_seed.wrapping_add(j as u64)) ^ prog.program_hash);
            match run_once(config, source, path, prog, world, seed) {
                Ok(dir) => {
                    summary.ok += 1;
                    eprintln!("run {} ok ({})", dir.display(), path.display());
                }
                Err(e) => {
                    summary.failed += 1;
                    eprintln!("run failed ({}, seed {seed}): {e}", path.display());
                }
            }
        }
    }
    Ok(summary)
}

fn scenario_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string())
}

fn run_once(
    config: &BatchConfig,
    source_spec: &ActionSourceSpec,
    scenario_path: &Path,
    prog: &CheckedProgram,
    world: &WorldModel,
    seed: u64,
) -> Result<PathBuf, CliError> {
    let dt = config.dt();
    let sampled = sample_scene_traced(prog, world, seed, config.max_rejections)?;
    let scene = sampled.scene;

    let mut source: Box<dyn ActionSource> = match source_spec {
        ActionSourceSpec::InProcess => {
            Box::new(BehaviorRuntime::new(&scene, prog, sampled.rng).map_err(scenegen_core::sim::SimError::from)?)
        }
        ActionSourceSpec::Tcp(addr) => {
            Box::new(SocketActionSource::connect(addr, Duration::from_secs(5))?)
        }
    };

    let run_dir = config.out.join(format!("{}_{seed}", scenario_stem(scenario_path)));
    let mut writer = RunWriter::create(&run_dir)?;
    writer.write_scene(&scene)?;

    let ego_id = scene.ego().id;
    let cam0 = config.cameras[0];
    let lidar0 = config.lidars[0];
    let k0 = intrinsics(&cam0);
    let lidar_to_cam = LidarToCam::between(&lidar0.mount, &cam0.mount);
    let capture_every = config.capture_every_n_steps as usize;

    let mut capture_error: Option<CliError> = None;
    let trajectory = {
        let mut recorder = |snap: &FrameSnapshot| {
            if snap.step % capture_every != 0 {
                return Ok(());
            }
            let ego_state = snap.states[&ego_id];
            let cameras: Vec<_> = config
                .cameras
                .iter()
                .map(|c| render_camera(snap.scene, &ego_state, c))
                .collect();
            let sweeps: Vec<_> = config
                .lidars
                .iter()
                .map(|l| sweep_lidar(snap.scene, &ego_state, l))
                .collect();
            let boxes3d = boxes_3d(snap.scene, &ego_state, &lidar0.mount);
            let boxes2d = boxes3d
                .iter()
                .filter_map(|b| project_box(b, &k0, &lidar_to_cam, (cam0.width, cam0.height)))
                .collect();
            let states = frame_states(snap);
            let frame = FrameData {
                cameras,
                sweeps,
                boxes3d,
                boxes2d,
                states,
            };
            writer.write_frame(&frame).map_err(|e| {
                let msg = e.to_string();
                capture_error = Some(e.into());
                scenegen_core::sim::SimError::Recorder(msg)
            })
        };
        run_simulation(&scene, config.duration, dt, source.as_mut(), &mut recorder)
    };
    let trajectory = match trajectory {
        Ok(t) => t,
        Err(e) => {
            return Err(capture_error.unwrap_or(CliError::Sim(e)));
        }
    };

    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        scenario_path: scenario_path.to_string_lossy().into_owned(),
        program_hash: prog.program_hash,
        seed,
        dt,
        duration: config.duration,
        sensor_rig: SensorRig {
            cameras: config.cameras.clone(),
            lidars: config.lidars.clone(),
        },
        frame_count: writer.frames_written(),
        class_table: class_table(),
        collision_steps: trajectory.collisions.clone(),
    };
    writer.finish(&manifest)?;
    Ok(run_dir)
}

/// Ground truth snapshot for `states.json`, agents sorted by id.
fn frame_states(snap: &FrameSnapshot) -> FrameStates {
    let classes: BTreeMap<u32, &'static str> = snap
        .scene
        .objects
        .iter()
        .map(|o| (o.id, o.class.name()))
        .collect();
    FrameStates {
        time: snap.time,
        agents: snap
            .states
            .iter()
            .map(|(&id, s)| WireAgentState {
                id,
                class: classes[&id].to_string(),
                x: s.x,
                y: s.y,
                heading: s.heading,
                speed: s.speed,
            })
            .collect(),
        actions: snap
            .actions
            .iter()
            .map(|(&id, a)| WireAction {
                id,
                throttle: a.throttle,
                steer: a.steer,
                brake: a.brake,
            })
            .collect(),
    }
}
