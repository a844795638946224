//! Learning and planning algorithms.

pub mod ada;
pub mod agents;
pub mod baselines;
pub mod ecolog;
pub mod planning;
pub mod warmup;

pub use ada::{ada_step, ada_step_with, AdaOutcome, AdaState};
pub use agents::{build_learner, AlgorithmId, Learner, LearnerSetup};
pub use baselines::{BaselineConstants, GlmUcb, Ons};
pub use ecolog::{ecolog_step, EcologState, EpsRule};
pub use planning::{
    greedy_arm, ofu_select, perturb, standard_normal, ts_select, ArmChoice, REJECTION_CAP,
};
pub use warmup::{diameter_guarantee, theoretical_tau, warmup_run, WarmUp};
