//! Efficient optimistic and randomized algorithms for logistic bandits.
//!
//! The central learner performs one constant-cost proximal step per round
//! instead of re-solving a maximum-likelihood problem over the full history.
//! Planning strategies (optimism, Thompson-style sampling, adaptive
//! constraint tracking), the shared linear algebra, and a reproducible
//! simulation harness are built on top of it.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// One learner lives per simulation cell; boxing the large variants buys nothing.
#![allow(clippy::large_enum_variant)]

pub mod checks;
pub mod cost;
pub mod error;
pub mod experiment;
pub mod learners;
pub mod linalg;
pub mod logistic;
pub mod schedule;
pub mod sim;
pub mod solvers;

pub use error::{Error, Result};
pub use experiment::{
    parse_config, run_experiment, simulate, ConfigOverrides, ExperimentConfig, ExperimentReport,
};
pub use learners::{
    ada_step, ecolog_step, ofu_select, ts_select, warmup_run, AdaState, AlgorithmId, ArmChoice,
    EcologState, Learner,
};
pub use linalg::{ArmGeometry, ConstraintSet, Ellipsoid, SpdMatrix};
pub use logistic::{
    alpha_coeffs, dsigmoid, kappa_of, logloss, norm_for_kappa, sigmoid, softplus, ProblemParams,
};
pub use schedule::{RadiusSchedule, ScheduleKind};
pub use sim::{
    aggregate, make_environment, run_episode, ArmSetKind, EnvSpec, Environment, ThetaSpec,
    TrajectoryLog,
};
pub use solvers::{pgd_iterations, solve_mle, solve_prox, MleProblem, ProxProblem};

// Re-exported so downstream crates build vectors with the same version.
pub use nalgebra;
