//! Ridge-regularized logistic maximum likelihood.

use nalgebra::{DMatrix, DVector};

use crate::cost;
use crate::error::{check_dim, Error, Result};
use crate::linalg::SpdMatrix;
use crate::logistic::{alpha_coeffs, dsigmoid, logloss, sigmoid};
use crate::solvers::prox::LossTerm;

/// Hard cap on outer iterations.
pub const MLE_MAX_ITER: usize = 10_000;
/// Iterations between refreshes of a locally built preconditioner.
const REFRESH_PERIOD: usize = 5;

#[derive(Debug, Clone, Copy)]
pub struct MleProblem<'a> {
    pub dim: usize,
    pub data: &'a [LossTerm],
    /// Weight of `(reg/2)‖θ‖²`.
    pub reg: f64,
    /// Fixed preconditioner; when absent the local curvature is used and
    /// refreshed periodically.
    pub preconditioner: Option<&'a SpdMatrix>,
    pub start: Option<&'a DVector<f64>>,
    /// Target Euclidean distance to the minimizer; enforced through
    /// `‖∇f‖ ≤ eps·reg`, which suffices by strong convexity.
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleSolution {
    pub theta: DVector<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Objective and gradient of `Σℓ(aᵀθ, r) + (reg/2)‖θ‖²`.
pub fn mle_objective(
    data: &[LossTerm],
    reg: f64,
    theta: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    let mut value = 0.5 * reg * theta.norm_squared();
    let mut grad = theta * reg;
    for (arm, r) in data {
        let loss = logloss(arm.dot(theta), *r)?;
        value += loss.value;
        grad.axpy(loss.grad, arm, 1.0);
    }
    cost::charge(data.len() * theta.len());
    Ok((value, grad))
}

/// `f(θ + s·d) − f(θ)` evaluated without cancellation, so that the line
/// search keeps working once the decrease drops below the resolution of `f`.
fn objective_change(
    data: &[LossTerm],
    reg: f64,
    theta: &DVector<f64>,
    dir: &DVector<f64>,
    s: f64,
) -> Result<f64> {
    let mut change = reg * (s * theta.dot(dir) + 0.5 * s * s * dir.norm_squared());
    for (arm, r) in data {
        let x = arm.dot(theta);
        let h = s * arm.dot(dir);
        // softplus(x+h) − softplus(x) = h·μ(x) + h²·α̃(x, x+h)
        let (_, curv) = alpha_coeffs(x, x + h);
        change += h * (sigmoid(x) - f64::from(*r)) + h * h * curv;
    }
    cost::charge(data.len() * theta.len());
    Ok(change)
}

/// Hessian `Σμ̇(aᵀθ)aaᵀ + reg·I`.
pub fn local_curvature(data: &[LossTerm], reg: f64, theta: &DVector<f64>) -> Result<SpdMatrix> {
    let d = theta.len();
    let mut h = DMatrix::identity(d, d) * reg;
    for (arm, _) in data {
        h.ger(dsigmoid(arm.dot(theta)), arm, arm, 1.0);
    }
    cost::charge(data.len() * d * d);
    SpdMatrix::from_matrix(h)
}

/// Preconditioned gradient descent with Armijo backtracking.
pub fn solve_mle(p: &MleProblem<'_>) -> Result<MleSolution> {
    if !(p.reg > 0.0) || !p.reg.is_finite() {
        return Err(Error::param(
            "reg",
            format!("must be finite and positive, got {}", p.reg),
        ));
    }
    if !(p.eps > 0.0) {
        return Err(Error::param(
            "eps",
            format!("must be positive, got {}", p.eps),
        ));
    }
    for (arm, r) in p.data {
        check_dim(p.dim, arm.len())?;
        if *r > 1 {
            return Err(Error::InvalidReward(*r));
        }
    }
    if let Some(m) = p.preconditioner {
        check_dim(p.dim, m.dim())?;
    }
    let mut theta = match p.start {
        Some(s) => {
            check_dim(p.dim, s.len())?;
            s.clone()
        }
        None => DVector::zeros(p.dim),
    };
    let tol = p.eps * p.reg;
    let mut local = match p.preconditioner {
        Some(_) => None,
        None => Some(local_curvature(p.data, p.reg, &theta)?),
    };
    let (_, mut grad) = mle_objective(p.data, p.reg, &theta)?;
    for it in 0..MLE_MAX_ITER {
        let grad_norm = grad.norm();
        if grad_norm <= tol {
            return Ok(MleSolution {
                theta,
                iterations: it,
                grad_norm,
            });
        }
        let precond = p
            .preconditioner
            .or(local.as_ref())
            .expect("one preconditioner is set");
        let dir = -precond.solve(&grad)?;
        let slope = grad.dot(&dir);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let change = objective_change(p.data, p.reg, &theta, &dir, step)?;
            if change <= 1e-4 * step * slope {
                let candidate = &theta + &dir * step;
                let (_, g) = mle_objective(p.data, p.reg, &candidate)?;
                accepted = Some((candidate, g));
                break;
            }
            step *= 0.5;
        }
        let Some((next, g)) = accepted else {
            return Err(Error::NoConvergence {
                what: "maximum-likelihood line search",
                iterations: it,
            });
        };
        theta = next;
        grad = g;
        if local.is_some() && (it + 1) % REFRESH_PERIOD == 0 {
            local = Some(local_curvature(p.data, p.reg, &theta)?);
        }
    }
    Err(Error::NoConvergence {
        what: "maximum likelihood",
        iterations: MLE_MAX_ITER,
    })
}

/// Predicted mean reward for each arm.
pub fn predicted_means(arms: &[DVector<f64>], theta: &DVector<f64>) -> Vec<f64> {
    arms.iter().map(|a| sigmoid(a.dot(theta))).collect()
}
