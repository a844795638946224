//! Convex sub-problem solvers.

pub mod mle;
pub mod prox;

pub use mle::{local_curvature, mle_objective, solve_mle, MleProblem, MleSolution};
pub use prox::{
    pgd_iterations, pgd_iterations_for_condition, project_in_metric, prox_curvature_bounds,
    prox_objective, solve_prox, solve_prox_iterations, LossTerm, ProxProblem, ProxSolution,
    EPS_FLOOR,
};
