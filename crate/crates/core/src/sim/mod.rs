//! Scene simulation: behavior execution, vehicle dynamics, and the lockstep
//! run loop that ties them together.

pub mod behavior;
pub mod dynamics;
pub mod runner;

pub use behavior::{BehaviorError, BehaviorInstance, BehaviorRuntime, StepOutcome};
pub use dynamics::{step_dynamics, Action, AgentState, VehicleParams};
pub use runner::{run_simulation, ActionSource, FrameSnapshot, SimError, Trajectory, TrajectoryStep};
