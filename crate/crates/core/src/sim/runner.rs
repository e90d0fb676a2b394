//! The lockstep simulation loop.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::protocol::{HelloMsg, ProtocolError, StateMsg, WireAgentState, PROTOCOL_VERSION};
use crate::scene::{footprints_overlap, Scene};
use crate::sim::behavior::{BehaviorError, BehaviorRuntime};
use crate::sim::dynamics::{step_dynamics, Action, AgentState, VehicleParams};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Behavior(#[from] BehaviorError),
    #[error("{0}")]
    Protocol(#[from] ProtocolError),
    #[error("step {step}: action set mismatch: {detail}")]
    ActionMismatch { step: u64, detail: String },
    #[error("recorder: {0}")]
    Recorder(String),
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Protocol(ProtocolError::Io(e))
    }
}

/// Supplies one action per behavior-bearing agent per step; either the
/// in-process behavior runtime or a protocol client talking to a server.
pub trait ActionSource {
    fn begin(&mut self, hello: &HelloMsg) -> Result<(), SimError>;
    fn actions_for(&mut self, state: &StateMsg) -> Result<Vec<(u32, Action)>, SimError>;
    fn finish(&mut self, reason: &str) -> Result<(), SimError>;
}

impl ActionSource for BehaviorRuntime {
    fn begin(&mut self, _hello: &HelloMsg) -> Result<(), SimError> {
        Ok(())
    }

    fn actions_for(&mut self, state: &StateMsg) -> Result<Vec<(u32, Action)>, SimError> {
        Ok(self.actions_for_state(state)?)
    }

    fn finish(&mut self, _reason: &str) -> Result<(), SimError> {
        Ok(())
    }
}

/// Everything a recorder sees for one step, before integration: poses in
/// `scene` match `states` at `time`.
pub struct FrameSnapshot<'a> {
    pub step: usize,
    pub time: f64,
    pub scene: &'a Scene,
    pub states: &'a BTreeMap<u32, AgentState>,
    pub actions: &'a BTreeMap<u32, Action>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub time: f64,
    pub states: BTreeMap<u32, AgentState>,
    pub actions: BTreeMap<u32, Action>,
}

/// Per-step ground truth of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub steps: Vec<TrajectoryStep>,
    /// Steps at which some pair of objects interpenetrated; the run records
    /// and continues.
    pub collisions: Vec<usize>,
}

/// Advance the scene for `round(duration / dt)` steps. Per step: send the
/// ground-truth states, receive one action per behavior-bearing agent,
/// record the frame, then integrate. Agents without behaviors stay static.
pub fn run_simulation(
    scene: &Scene,
    duration: f64,
    dt: f64,
    source: &mut dyn ActionSource,
    recorder: &mut dyn FnMut(&FrameSnapshot) -> Result<(), SimError>,
) -> Result<Trajectory, SimError> {
    if !(dt > 0.0) {
        return Err(SimError::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    if duration < dt {
        return Err(SimError::InvalidConfig(format!(
            "duration {duration} is shorter than one step {dt}"
        )));
    }
    let steps = (duration / dt).round() as usize;

    let mut working = scene.clone();
    let mut states: BTreeMap<u32, AgentState> = working
        .objects
        .iter()
        .map(|o| {
            (
                o.id,
                AgentState {
                    x: o.x,
                    y: o.y,
                    heading: o.heading,
                    speed: 0.0,
                },
            )
        })
        .collect();

    let mut behaving: Vec<(u32, VehicleParams)> = Vec::new();
    for o in &working.objects {
        if o.behavior.is_some() {
            let params = VehicleParams::for_class(o.class).ok_or_else(|| {
                SimError::InvalidConfig(format!(
                    "object {} of class {} cannot move",
                    o.id,
                    o.class.name()
                ))
            })?;
            behaving.push((o.id, params));
        }
    }
    let behaving_ids: Vec<u32> = behaving.iter().map(|(id, _)| *id).collect();

    source.begin(&HelloMsg {
        version: PROTOCOL_VERSION,
        scenario_hash: working.program_hash,
        seed: working.seed,
        dt,
        agent_ids: behaving_ids.clone(),
    })?;

    let class_names: BTreeMap<u32, &'static str> = working
        .objects
        .iter()
        .map(|o| (o.id, o.class.name()))
        .collect();

    let mut trajectory = Trajectory {
        dt,
        steps: Vec::with_capacity(steps),
        collisions: Vec::new(),
    };

    for step in 0..steps {
        let time = step as f64 * dt;
        let msg = StateMsg {
            step: step as u64,
            time,
            agents: states
                .iter()
                .map(|(&id, s)| WireAgentState {
                    id,
                    class: class_names[&id].to_string(),
                    x: s.x,
                    y: s.y,
                    heading: s.heading,
                    speed: s.speed,
                })
                .collect(),
        };

        let raw_actions = source.actions_for(&msg)?;
        let actions: BTreeMap<u32, Action> = raw_actions.into_iter().collect();
        let got: Vec<u32> = actions.keys().copied().collect();
        if got != behaving_ids {
            return Err(SimError::ActionMismatch {
                step: step as u64,
                detail: format!("expected agents {behaving_ids:?}, got {got:?}"),
            });
        }

        recorder(&FrameSnapshot {
            step,
            time,
            scene: &working,
            states: &states,
            actions: &actions,
        })?;

        if scan_collisions(&working) {
            trajectory.collisions.push(step);
        }

        trajectory.steps.push(TrajectoryStep {
            time,
            states: states.clone(),
            actions: actions.clone(),
        });

        for (id, params) in &behaving {
            let action = actions[id];
            let next = step_dynamics(&states[id], action, dt, params);
            states.insert(*id, next);
            let obj = working
                .objects
                .iter_mut()
                .find(|o| o.id == *id)
                .expect("behaving object exists");
            obj.x = next.x;
            obj.y = next.y;
            obj.heading = next.heading;
        }
    }

    source.finish("done")?;
    Ok(trajectory)
}

/// Any interpenetrating pair this frame, ignoring pairs that opted out of
/// collision checks and pairs of two static objects (which never move).
fn scan_collisions(scene: &Scene) -> bool {
    let objs = &scene.objects;
    for i in 0..objs.len() {
        for j in (i + 1)..objs.len() {
            let (a, b) = (&objs[i], &objs[j]);
            if a.behavior.is_none() && b.behavior.is_none() {
                continue;
            }
            if a.allow_collisions || b.allow_collisions {
                continue;
            }
            if footprints_overlap(a, b) {
                return true;
            }
        }
    }
    false
}
