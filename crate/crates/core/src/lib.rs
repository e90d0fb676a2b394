//! Scenario-driven synthetic driving data: a probabilistic scenario DSL,
//! scene sampling, lockstep simulation, sensor synthesis, and dataset I/O.

pub mod annotate;
pub mod dataset;
pub mod dsl;
pub mod geom;
pub mod protocol;
pub mod rng;
pub mod sampler;
pub mod scene;
pub mod sensor;
pub mod sim;
pub mod world;
