//! The per-round proximal learner.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{ConstraintSet, SpdMatrix};
use crate::logistic::dsigmoid;
use crate::schedule::RadiusSchedule;
use crate::solvers::{solve_prox, LossTerm, ProxProblem, ProxSolution};

/// Accuracy requested from the inner solver at round `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EpsRule {
    /// `ε_t = 1/t`.
    #[default]
    InverseRound,
    Constant(f64),
}

impl EpsRule {
    pub fn eps(&self, t: usize) -> f64 {
        match *self {
            EpsRule::InverseRound => 1.0 / t.max(1) as f64,
            EpsRule::Constant(eps) => eps,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EcologState {
    pub theta: DVector<f64>,
    pub w: SpdMatrix,
    pub constraint: ConstraintSet,
    /// Diameter bound `D` of the constraint under the arm set; sets `η = 1/(2+D)`.
    pub diameter: f64,
    /// Index of the round whose observation is processed next.
    pub t: usize,
    pub schedule: RadiusSchedule,
    pub eps_rule: EpsRule,
}

impl EcologState {
    /// Starts from `W = I` at round `t`.
    pub fn new(
        theta: DVector<f64>,
        constraint: ConstraintSet,
        diameter: f64,
        t: usize,
        schedule: RadiusSchedule,
    ) -> Result<Self> {
        let d = constraint.dim();
        check_dim(d, theta.len())?;
        if !(diameter >= 0.0) || !diameter.is_finite() {
            return Err(Error::param(
                "diameter",
                format!("must be finite and nonnegative, got {diameter}"),
            ));
        }
        if t < 1 {
            return Err(Error::InvalidRound(t));
        }
        Ok(Self {
            theta,
            w: SpdMatrix::scaled_identity(d, 1.0)?,
            constraint,
            diameter,
            t,
            schedule,
            eps_rule: EpsRule::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn eta(&self) -> f64 {
        1.0 / (2.0 + self.diameter)
    }

    pub fn eps(&self) -> f64 {
        self.eps_rule.eps(self.t)
    }

    /// Solves the proximal program anchored at the current state.
    pub fn prox(&self, terms: &[LossTerm]) -> Result<ProxSolution> {
        solve_prox(&ProxProblem {
            metric: &self.w,
            anchor: &self.theta,
            eta: self.eta(),
            terms,
            constraint: &self.constraint,
            eps: self.eps(),
        })
    }

    /// Commits `theta_next` as the new estimate for an observation on `arm`.
    /// The metric grows by the sensitivity at the committed estimate.
    pub fn commit(&mut self, arm: &DVector<f64>, theta_next: DVector<f64>) -> Result<()> {
        check_dim(self.dim(), theta_next.len())?;
        let weight = dsigmoid(arm.dot(&theta_next));
        self.w.rank1_update(arm, weight)?;
        self.theta = theta_next;
        self.t += 1;
        Ok(())
    }

    /// `‖θ − θ_t‖²_{W_t}`.
    pub fn distance_sq(&self, theta: &DVector<f64>) -> Result<f64> {
        self.w.mahalanobis_sq(&(theta - &self.theta))
    }
}

/// One learning round: proximal step on `ℓ(aᵀθ, r)` then the metric update.
pub fn ecolog_step(state: &mut EcologState, arm: &DVector<f64>, reward: u8) -> Result<()> {
    check_dim(state.dim(), arm.len())?;
    if reward > 1 {
        return Err(Error::InvalidReward(reward));
    }
    let terms = [(arm.clone(), reward)];
    let next = state.prox(&terms)?.theta;
    state.commit(arm, next)
}
