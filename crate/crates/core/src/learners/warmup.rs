//! Forced exploration producing a small admissible parameter set.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{ArmGeometry, Ellipsoid, SpdMatrix};
use crate::logistic::ProblemParams;
use crate::schedule::RadiusSchedule;
use crate::solvers::{solve_mle, LossTerm, MleProblem};

use super::planning::ArmChoice;

/// Accuracy of the closing maximum-likelihood fit.
const FIT_EPS: f64 = 1e-9;

/// `⌈16 κ d β_T log(1+T)⌉`, the length that provably shrinks the set to
/// diameter at most one under the arms.
pub fn theoretical_tau(params: &ProblemParams, horizon: usize) -> Result<usize> {
    let schedule = RadiusSchedule::new(*params);
    let beta = schedule.beta(horizon.max(1));
    let tau = 16.0 * params.kappa * params.dim as f64 * beta * (1.0 + horizon as f64).ln();
    Ok(tau.ceil() as usize)
}

/// `4 √(κ β_T d log(1+T) / τ)`.
pub fn diameter_guarantee(params: &ProblemParams, horizon: usize, tau: usize) -> Result<f64> {
    let beta = RadiusSchedule::new(*params).beta(horizon.max(1));
    Ok(4.0
        * (params.kappa * beta * params.dim as f64 * (1.0 + horizon as f64).ln() / tau as f64)
            .sqrt())
}

/// Warm-up as an incremental state machine so it can be driven round by round.
#[derive(Debug, Clone)]
pub struct WarmUp {
    params: ProblemParams,
    tau: usize,
    lambda: f64,
    v: SpdMatrix,
    data: Vec<LossTerm>,
}

impl WarmUp {
    pub fn new(params: ProblemParams, tau: usize) -> Result<Self> {
        if tau < 1 {
            return Err(Error::param("tau", "warm-up needs at least one round"));
        }
        let lambda = RadiusSchedule::new(params).lambda(tau);
        Ok(Self {
            params,
            tau,
            lambda,
            v: SpdMatrix::scaled_identity(params.dim, lambda)?,
            data: Vec::with_capacity(tau.min(1 << 20)),
        })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn rounds_played(&self) -> usize {
        self.data.len()
    }

    pub fn is_done(&self) -> bool {
        self.data.len() >= self.tau
    }

    pub fn design(&self) -> &SpdMatrix {
        &self.v
    }

    /// Most uncertain arm: `argmax ‖a‖_{V⁻¹}`, lowest index on ties. On the
    /// unit ball this is the eigenvector of the smallest eigenvalue of `V`.
    pub fn select(&self, arms: ArmGeometry<'_>) -> Result<ArmChoice> {
        match arms {
            ArmGeometry::Finite(list) => {
                if list.is_empty() {
                    return Err(Error::EmptyArmSet);
                }
                let mut best = (0, f64::NEG_INFINITY);
                for (i, a) in list.iter().enumerate() {
                    check_dim(self.params.dim, a.len())?;
                    let u = self.v.inv_norm_sq_cached(a)?;
                    if u > best.1 {
                        best = (i, u);
                    }
                }
                Ok(ArmChoice::Index(best.0))
            }
            ArmGeometry::UnitBall => {
                let eig = self.v.eigen();
                let mut k = 0;
                for i in 1..eig.eigenvalues.len() {
                    if eig.eigenvalues[i] < eig.eigenvalues[k] {
                        k = i;
                    }
                }
                let mut u: DVector<f64> = eig.eigenvectors.column(k).into_owned();
                u /= u.norm();
                // Fix the sign so the choice is reproducible.
                if let Some(first) = u.iter().find(|x| x.abs() > 1e-12) {
                    if *first < 0.0 {
                        u = -u;
                    }
                }
                Ok(ArmChoice::Vector(u))
            }
        }
    }

    pub fn observe(&mut self, arm: &DVector<f64>, reward: u8) -> Result<()> {
        check_dim(self.params.dim, arm.len())?;
        if reward > 1 {
            return Err(Error::InvalidReward(reward));
        }
        self.v.rank1_update(arm, 1.0 / self.params.kappa)?;
        self.data.push((arm.clone(), reward));
        Ok(())
    }

    /// Fits `θ̂ = argmin Σℓ + λ‖θ‖²/2` and returns `{‖θ − θ̂‖²_V ≤ β_τ}`.
    pub fn finish(self) -> Result<Ellipsoid> {
        let fit = solve_mle(&MleProblem {
            dim: self.params.dim,
            data: &self.data,
            reg: self.lambda,
            preconditioner: None,
            start: None,
            eps: FIT_EPS,
        })?;
        let beta = RadiusSchedule::new(self.params).beta(self.tau);
        Ellipsoid::new(fit.theta, self.v, beta)
    }
}

/// Plays `tau` warm-up rounds against `pull` and returns the admissible set.
pub fn warmup_run<F>(
    tau: usize,
    arms: ArmGeometry<'_>,
    params: ProblemParams,
    mut pull: F,
) -> Result<Ellipsoid>
where
    F: FnMut(&DVector<f64>) -> Result<u8>,
{
    let mut state = WarmUp::new(params, tau)?;
    while !state.is_done() {
        let arm = state.select(arms)?.resolve(arms)?;
        let reward = pull(&arm)?;
        state.observe(&arm, reward)?;
    }
    state.finish()
}
