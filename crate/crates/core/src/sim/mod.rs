//! Environments, the episode runner and run statistics.

pub mod env;
pub mod rng;
pub mod runner;
pub mod stats;

pub use env::{
    make_environment, sample_direction, sample_in_ball, ArmSetKind, EnvSpec, Environment, ThetaSpec,
};
pub use rng::{stream, Stream};
pub use runner::{run_episode, RoundRecord, TrajectoryLog};
pub use stats::{aggregate, design_diagnostics, Aggregate};
