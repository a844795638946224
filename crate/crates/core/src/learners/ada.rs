//! Warm-up-free variant: rounds whose sensitivity estimates disagree are
//! diverted into a history that shrinks the admissible set instead.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{ArmGeometry, ConstraintSet, Ellipsoid, SpdMatrix};
use crate::logistic::{dsigmoid, ProblemParams};
use crate::schedule::RadiusSchedule;
use crate::solvers::{solve_mle, LossTerm, MleProblem};

use super::ecolog::EcologState;
use super::planning::ofu_select;

/// Accuracy of the history refit.
const REFIT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaOutcome {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone)]
pub struct AdaState {
    /// Learner running over the current admissible set `Θ_t`.
    pub inner: EcologState,
    pub history: Vec<LossTerm>,
    pub theta_hat_h: DVector<f64>,
    pub v_h: SpdMatrix,
    params: ProblemParams,
    /// Radius of the planning set around `(θ_t, W_t)`; `None` while it is
    /// still the initial ball.
    plan_radius: Option<f64>,
}

impl AdaState {
    pub fn new(params: ProblemParams) -> Result<Self> {
        let d = params.dim;
        let schedule = RadiusSchedule::new(params);
        let ball = ConstraintSet::ball(d, params.s)?;
        let inner = EcologState::new(DVector::zeros(d), ball, 2.0 * params.s, 1, schedule)?;
        Ok(Self {
            inner,
            history: Vec::new(),
            theta_hat_h: DVector::zeros(d),
            v_h: SpdMatrix::scaled_identity(d, schedule.gamma(1))?,
            params,
            plan_radius: None,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    /// Optimistic arm over the current planning set.
    pub fn select(&self, arms: &[DVector<f64>]) -> Result<(usize, f64)> {
        match self.plan_radius {
            Some(r) => ofu_select(&self.inner.theta, &self.inner.w, r, arms),
            None => {
                if arms.is_empty() {
                    return Err(Error::EmptyArmSet);
                }
                let mut best = (0, f64::NEG_INFINITY);
                for (i, a) in arms.iter().enumerate() {
                    check_dim(self.params.dim, a.len())?;
                    let v = self.params.s * a.norm();
                    if v > best.1 {
                        best = (i, v);
                    }
                }
                Ok(best)
            }
        }
    }

    /// Whether `theta` lies in the planning set.
    pub fn plan_contains(&self, theta: &DVector<f64>) -> Result<bool> {
        match self.plan_radius {
            Some(r) => Ok(self.inner.distance_sq(theta)? <= r),
            None => Ok(theta.norm() <= self.params.s),
        }
    }

    pub fn plan_radius(&self) -> Option<f64> {
        self.plan_radius
    }

    /// `S⁶ κ d² log(T/δ)²`, the order of the largest history the mechanism
    /// can accumulate over `horizon` rounds (unit constant).
    pub fn history_envelope(&self, horizon: usize) -> f64 {
        let p = &self.params;
        let log = (horizon as f64 / p.delta).ln();
        p.s.powi(6) * p.kappa * (p.dim * p.dim) as f64 * log * log
    }
}

/// One round of the adaptive mechanism. `arms` is used to recompute the
/// diameter bound whenever the admissible set shrinks.
pub fn ada_step(
    state: &mut AdaState,
    arm: &DVector<f64>,
    reward: u8,
    arms: ArmGeometry<'_>,
) -> Result<AdaOutcome> {
    ada_step_with(state, arm, reward, arms, None)
}

/// As [`ada_step`], with the acceptance test optionally overridden.
pub fn ada_step_with(
    state: &mut AdaState,
    arm: &DVector<f64>,
    reward: u8,
    arms: ArmGeometry<'_>,
    force: Option<bool>,
) -> Result<AdaOutcome> {
    check_dim(state.params.dim, arm.len())?;
    if reward > 1 {
        return Err(Error::InvalidReward(reward));
    }
    let inner = &state.inner;
    let theta0 = inner.prox(&[(arm.clone(), 0)])?.theta;
    let theta1 = inner.prox(&[(arm.clone(), 1)])?.theta;
    let accept = match force {
        Some(decision) => decision,
        None => {
            let bar = inner.prox(&[(arm.clone(), 0), (arm.clone(), 1)])?.theta;
            let s_bar = dsigmoid(arm.dot(&bar));
            s_bar <= 2.0 * dsigmoid(arm.dot(&theta0)) && s_bar <= 2.0 * dsigmoid(arm.dot(&theta1))
        }
    };
    let t = inner.t;
    let schedule = inner.schedule;
    if accept {
        let next = if reward == 1 { theta1 } else { theta0 };
        state.inner.commit(arm, next)?;
        state.plan_radius = Some(schedule.eta(t));
        return Ok(AdaOutcome::Accepted);
    }

    state.history.push((arm.clone(), reward));
    let gamma = schedule.gamma(t);
    let fit = solve_mle(&MleProblem {
        dim: state.params.dim,
        data: &state.history,
        reg: 2.0 * gamma,
        preconditioner: None,
        start: Some(&state.theta_hat_h),
        eps: REFIT_EPS,
    })?;
    let d = state.params.dim;
    let mut v = DMatrix::identity(d, d) * gamma;
    for (a, _) in &state.history {
        v.ger(1.0 / state.params.kappa, a, a, 1.0);
    }
    state.v_h = SpdMatrix::from_matrix(v)?;
    state.theta_hat_h = fit.theta;
    let ellipsoid = Ellipsoid::new(
        state.theta_hat_h.clone(),
        state.v_h.clone(),
        schedule.beta(t),
    )?;
    let set = ConstraintSet::intersection(ellipsoid, state.params.s)?;
    state.inner.diameter = set.diam_under_arms(arms)?;
    state.inner.constraint = set;
    state.inner.t += 1;
    Ok(AdaOutcome::Rejected)
}
