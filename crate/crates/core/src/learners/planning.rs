//! Arm selection: optimistic enumeration and Gaussian posterior-style sampling.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{ArmGeometry, ConstraintSet, SpdMatrix};

/// Draw cap for rejection sampling.
pub const REJECTION_CAP: usize = 10_000;

/// The arm a learner decided to play.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmChoice {
    /// Index into the round's finite arm list.
    Index(usize),
    /// A point of the unit ball.
    Vector(DVector<f64>),
}

impl ArmChoice {
    pub fn resolve(&self, arms: ArmGeometry<'_>) -> Result<DVector<f64>> {
        match (self, arms) {
            (ArmChoice::Index(i), ArmGeometry::Finite(list)) => {
                list.get(*i).cloned().ok_or(Error::ForeignArm)
            }
            (ArmChoice::Vector(v), ArmGeometry::UnitBall) => Ok(v.clone()),
            _ => Err(Error::ForeignArm),
        }
    }
}

/// Maximizes `aᵀθ + √radius·‖a‖_{W⁻¹}`; ties go to the lowest index.
pub fn ofu_select(
    theta: &DVector<f64>,
    w: &SpdMatrix,
    radius: f64,
    arms: &[DVector<f64>],
) -> Result<(usize, f64)> {
    if arms.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    if !(radius >= 0.0) {
        return Err(Error::param(
            "radius",
            format!("must be nonnegative, got {radius}"),
        ));
    }
    let scale = radius.sqrt();
    let mut best = (0, f64::NEG_INFINITY);
    for (i, a) in arms.iter().enumerate() {
        check_dim(theta.len(), a.len())?;
        let bonus = if scale > 0.0 {
            scale * w.inv_norm_sq_cached(a)?.max(0.0).sqrt()
        } else {
            0.0
        };
        let score = a.dot(theta) + bonus;
        if score > best.1 {
            best = (i, score);
        }
    }
    Ok(best)
}

/// Greedy arm for a parameter: lowest-index argmax over a finite set, or the
/// normalized direction on the unit ball.
pub fn greedy_arm(theta: &DVector<f64>, arms: ArmGeometry<'_>) -> Result<ArmChoice> {
    match arms {
        ArmGeometry::Finite(list) => {
            if list.is_empty() {
                return Err(Error::EmptyArmSet);
            }
            let mut best = (0, f64::NEG_INFINITY);
            for (i, a) in list.iter().enumerate() {
                check_dim(theta.len(), a.len())?;
                let v = a.dot(theta);
                if v > best.1 {
                    best = (i, v);
                }
            }
            Ok(ArmChoice::Index(best.0))
        }
        ArmGeometry::UnitBall => {
            let n = theta.norm();
            if n > 0.0 {
                Ok(ArmChoice::Vector(theta / n))
            } else {
                // Every unit arm is optimal for the zero parameter.
                let mut e = DVector::zeros(theta.len());
                e[0] = 1.0;
                Ok(ArmChoice::Vector(e))
            }
        }
    }
}

/// `θ + √radius · L⁻ᵀξ` for a given standard draw `ξ`, where `W = LLᵀ`.
pub fn perturb(
    theta: &DVector<f64>,
    w: &SpdMatrix,
    radius: f64,
    xi: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim(theta.len(), xi.len())?;
    Ok(theta + w.solve_upper(xi)? * radius.max(0.0).sqrt())
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Samples `θ̃ ~ N(θ, radius·W⁻¹)` conditioned on `θ̃ ∈ Θ` (when a set is
/// given) and plays the greedy arm for `θ̃`.
pub fn ts_select<R: Rng + ?Sized>(
    theta: &DVector<f64>,
    w: &SpdMatrix,
    radius: f64,
    constraint: Option<&ConstraintSet>,
    arms: ArmGeometry<'_>,
    rng: &mut R,
) -> Result<(ArmChoice, DVector<f64>)> {
    for _ in 0..REJECTION_CAP {
        let xi = standard_normal(rng, theta.len());
        let sample = perturb(theta, w, radius, &xi)?;
        if constraint.map_or(Ok(true), |c| c.contains(&sample))? {
            return Ok((greedy_arm(&sample, arms)?, sample));
        }
    }
    Err(Error::RejectionCap(REJECTION_CAP))
}
