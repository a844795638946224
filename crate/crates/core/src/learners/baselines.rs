//! Reference algorithms with κ-dependent confidence widths.
//!
//! Both keep `V_t = I + Σ a_s a_sᵀ/κ` and use the bonus `√(κ λ_t)·‖a‖_{V_t⁻¹}`.
//! GLM-UCB refits a regularized maximum-likelihood estimate on the whole
//! history every round; ONS takes one Newton-like step with curvature `1/κ`
//! followed by a projection onto the norm ball in the `V_t` geometry.

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{ArmGeometry, ConstraintSet, SpdMatrix};
use crate::logistic::{sigmoid, ProblemParams};
use crate::schedule::RadiusSchedule;
use crate::solvers::{project_in_metric, solve_mle, LossTerm, MleProblem};

use super::planning::{ofu_select, ts_select, ArmChoice};

/// Constants shared by both baselines; echoed in experiment metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineConstants {
    /// Ridge term of the design matrix `V_t`.
    pub design_reg: f64,
    /// Weight of each arm in `V_t`.
    pub design_weight: f64,
    /// MLE regularizer `reg` of `(reg/2)‖θ‖²` is `λ_t` times this.
    pub mle_reg_factor: f64,
    /// MLE accuracy `1/T`.
    pub mle_eps: f64,
    /// Human-readable form of the confidence width.
    pub width_rule: &'static str,
}

impl BaselineConstants {
    pub fn new(params: &ProblemParams, horizon: usize) -> Self {
        Self {
            design_reg: 1.0,
            design_weight: 1.0 / params.kappa,
            mle_reg_factor: 1.0,
            mle_eps: 1.0 / horizon.max(1) as f64,
            width_rule: "sqrt(kappa * lambda_t) * ||a||_{V_t^-1}",
        }
    }
}

/// Squared confidence width `κ λ_t`.
fn width_sq(params: &ProblemParams, schedule: &RadiusSchedule, t: usize) -> Result<f64> {
    Ok(params.kappa * schedule.lambda(t.max(1)))
}

fn plan<R: Rng + ?Sized>(
    theta: &DVector<f64>,
    v: &SpdMatrix,
    radius: f64,
    arms: ArmGeometry<'_>,
    rng: &mut R,
) -> Result<ArmChoice> {
    match arms {
        ArmGeometry::Finite(list) => Ok(ArmChoice::Index(ofu_select(theta, v, radius, list)?.0)),
        // No closed-form optimistic arm on the ball: sample instead.
        ArmGeometry::UnitBall => Ok(ts_select(theta, v, radius, None, arms, rng)?.0),
    }
}

fn check_obs(dim: usize, arm: &DVector<f64>, reward: u8) -> Result<()> {
    check_dim(dim, arm.len())?;
    if reward > 1 {
        return Err(Error::InvalidReward(reward));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GlmUcb {
    params: ProblemParams,
    schedule: RadiusSchedule,
    constants: BaselineConstants,
    v: SpdMatrix,
    data: Vec<LossTerm>,
    theta: DVector<f64>,
}

impl GlmUcb {
    pub fn new(params: ProblemParams, horizon: usize) -> Result<Self> {
        let constants = BaselineConstants::new(&params, horizon);
        Ok(Self {
            params,
            schedule: RadiusSchedule::new(params),
            constants,
            v: SpdMatrix::scaled_identity(params.dim, constants.design_reg)?,
            data: Vec::new(),
            theta: DVector::zeros(params.dim),
        })
    }

    pub fn constants(&self) -> &BaselineConstants {
        &self.constants
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn design(&self) -> &SpdMatrix {
        &self.v
    }

    pub fn width_sq(&self) -> Result<f64> {
        width_sq(&self.params, &self.schedule, self.data.len())
    }

    pub fn select<R: Rng + ?Sized>(&self, arms: ArmGeometry<'_>, rng: &mut R) -> Result<ArmChoice> {
        plan(&self.theta, &self.v, self.width_sq()?, arms, rng)
    }

    pub fn observe(&mut self, arm: &DVector<f64>, reward: u8) -> Result<()> {
        check_obs(self.params.dim, arm, reward)?;
        self.data.push((arm.clone(), reward));
        self.v.rank1_update(arm, self.constants.design_weight)?;
        let reg = self.constants.mle_reg_factor * self.schedule.lambda(self.data.len());
        let fit = solve_mle(&MleProblem {
            dim: self.params.dim,
            data: &self.data,
            reg,
            preconditioner: None,
            start: Some(&self.theta),
            eps: self.constants.mle_eps,
        })?;
        self.theta = fit.theta;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Ons {
    params: ProblemParams,
    schedule: RadiusSchedule,
    constants: BaselineConstants,
    ball: ConstraintSet,
    a: SpdMatrix,
    theta: DVector<f64>,
    t: usize,
}

impl Ons {
    pub fn new(params: ProblemParams, horizon: usize) -> Result<Self> {
        let constants = BaselineConstants::new(&params, horizon);
        Ok(Self {
            params,
            schedule: RadiusSchedule::new(params),
            constants,
            ball: ConstraintSet::ball(params.dim, params.s)?,
            a: SpdMatrix::scaled_identity(params.dim, constants.design_reg)?,
            theta: DVector::zeros(params.dim),
            t: 0,
        })
    }

    pub fn constants(&self) -> &BaselineConstants {
        &self.constants
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn width_sq(&self) -> Result<f64> {
        width_sq(&self.params, &self.schedule, self.t)
    }

    pub fn select<R: Rng + ?Sized>(&self, arms: ArmGeometry<'_>, rng: &mut R) -> Result<ArmChoice> {
        plan(&self.theta, &self.a, self.width_sq()?, arms, rng)
    }

    pub fn observe(&mut self, arm: &DVector<f64>, reward: u8) -> Result<()> {
        check_obs(self.params.dim, arm, reward)?;
        let g = arm * (sigmoid(arm.dot(&self.theta)) - f64::from(reward));
        self.a.rank1_update(arm, self.constants.design_weight)?;
        let step = &self.theta - self.a.solve(&g)?;
        self.theta = project_in_metric(&self.a, &self.ball, &step)?;
        self.t += 1;
        Ok(())
    }
}
