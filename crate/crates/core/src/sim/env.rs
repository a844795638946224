//! Logistic reward environments.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::learners::{standard_normal, ArmChoice};
use crate::linalg::ArmGeometry;
use crate::logistic::sigmoid;

use super::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArmSetKind {
    /// `K` arms drawn once per run.
    Fixed,
    /// `K` fresh arms every round.
    Contextual,
    UnitBall,
}

/// How the unknown parameter is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    /// Uniformly random direction with this norm.
    Norm(f64),
    Explicit(DVector<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub dim: usize,
    pub kind: ArmSetKind,
    pub num_arms: usize,
    pub theta: ThetaSpec,
    /// Norm bound the parameter must respect.
    pub norm_bound: f64,
}

#[derive(Debug, Clone)]
pub struct Environment {
    theta_star: DVector<f64>,
    kind: ArmSetKind,
    num_arms: usize,
    arms: Vec<DVector<f64>>,
    arm_rng: ChaCha8Rng,
    reward_rng: ChaCha8Rng,
}

/// Uniform point of the unit ball.
pub fn sample_in_ball(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    let dir = sample_direction(rng, dim);
    let radius: f64 = rng.random::<f64>().powf(1.0 / dim as f64);
    dir * radius
}

/// Uniform point of the unit sphere.
pub fn sample_direction(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let g = standard_normal(rng, dim);
        let n = g.norm();
        if n > 1e-12 {
            return g / n;
        }
    }
}

pub fn make_environment(spec: &EnvSpec, seed: u64, run_id: u64) -> Result<Environment> {
    if spec.dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    if spec.kind != ArmSetKind::UnitBall && spec.num_arms == 0 {
        return Err(Error::EmptyArmSet);
    }
    let theta_star = match &spec.theta {
        ThetaSpec::Norm(n) => {
            if !(*n >= 0.0) {
                return Err(Error::param(
                    "theta_star",
                    format!("norm must be nonnegative, got {n}"),
                ));
            }
            sample_direction(&mut stream(seed, run_id, Stream::Theta, 0), spec.dim) * *n
        }
        ThetaSpec::Explicit(v) => {
            check_dim(spec.dim, v.len())?;
            v.clone()
        }
    };
    if theta_star.norm() > spec.norm_bound * (1.0 + 1e-12) {
        return Err(Error::param(
            "theta_star",
            format!(
                "norm {} exceeds the bound {}",
                theta_star.norm(),
                spec.norm_bound
            ),
        ));
    }
    let mut arm_rng = stream(seed, run_id, Stream::Arms, 0);
    let arms = match spec.kind {
        ArmSetKind::Fixed => (0..spec.num_arms)
            .map(|_| sample_in_ball(&mut arm_rng, spec.dim))
            .collect(),
        _ => Vec::new(),
    };
    Ok(Environment {
        theta_star,
        kind: spec.kind,
        num_arms: spec.num_arms,
        arms,
        arm_rng,
        reward_rng: stream(seed, run_id, Stream::Rewards, 0),
    })
}

impl Environment {
    /// Fixed finite environment with explicit arms.
    pub fn with_arms(theta_star: DVector<f64>, arms: Vec<DVector<f64>>, seed: u64) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::EmptyArmSet);
        }
        for a in &arms {
            check_dim(theta_star.len(), a.len())?;
        }
        Ok(Self {
            theta_star,
            kind: ArmSetKind::Fixed,
            num_arms: arms.len(),
            arms,
            arm_rng: stream(seed, 0, Stream::Arms, 0),
            reward_rng: stream(seed, 0, Stream::Rewards, 0),
        })
    }

    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    pub fn kind(&self) -> ArmSetKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    /// Prepares the arm set of the next round (a fresh draw for contextual sets).
    pub fn begin_round(&mut self) {
        if self.kind == ArmSetKind::Contextual {
            let d = self.dim();
            self.arms = (0..self.num_arms)
                .map(|_| sample_in_ball(&mut self.arm_rng, d))
                .collect();
        }
    }

    pub fn arms(&self) -> ArmGeometry<'_> {
        match self.kind {
            ArmSetKind::UnitBall => ArmGeometry::UnitBall,
            _ => ArmGeometry::Finite(&self.arms),
        }
    }

    pub fn mean(&self, arm: &DVector<f64>) -> f64 {
        sigmoid(arm.dot(&self.theta_star))
    }

    /// Mean reward of the best arm of the current round.
    pub fn best_mean(&self) -> f64 {
        match self.kind {
            ArmSetKind::UnitBall => sigmoid(self.theta_star.norm()),
            _ => self
                .arms
                .iter()
                .map(|a| self.mean(a))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn resolve(&self, choice: &ArmChoice) -> Result<DVector<f64>> {
        choice.resolve(self.arms())
    }

    /// Bernoulli reward for `arm`, which must belong to the current arm set.
    pub fn pull(&mut self, arm: &DVector<f64>) -> Result<u8> {
        check_dim(self.dim(), arm.len())?;
        let valid = match self.kind {
            ArmSetKind::UnitBall => arm.norm() <= 1.0 + 1e-9,
            _ => self.arms.iter().any(|a| a == arm),
        };
        if !valid {
            return Err(Error::ForeignArm);
        }
        // One uniform per round keeps reward noise coupled across learners.
        let u: f64 = self.reward_rng.random();
        Ok(u8::from(u < self.mean(arm)))
    }
}
