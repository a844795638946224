//! Scalar logistic primitives and the problem constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logistic function `1 / (1 + e^{-x})`, evaluated without overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the logistic function, `μ(x)(1 − μ(x))`.
#[inline]
pub fn dsigmoid(x: f64) -> f64 {
    // Written in terms of e^{-|x|} so the tails keep full relative precision.
    let e = (-x.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// `log(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Value and derivative (with respect to `x`) of the log-loss of a binary label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub grad: f64,
}

/// Log-loss `−r log μ(x) − (1 − r) log(1 − μ(x))` and its derivative `μ(x) − r`.
pub fn logloss(x: f64, reward: u8) -> Result<LossEval> {
    let value = match reward {
        1 => softplus(-x),
        0 => softplus(x),
        other => return Err(Error::InvalidReward(other)),
    };
    Ok(LossEval {
        value,
        grad: sigmoid(x) - f64::from(reward),
    })
}

/// Inverse minimal reward sensitivity for arms in the unit ball and parameters
/// of norm at most `s`: `1 / μ̇(s)`.
pub fn kappa_of(s: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::param(
            "S",
            format!("must be finite and nonnegative, got {s}"),
        ));
    }
    Ok(1.0 / dsigmoid(s))
}

/// Parameter norm whose minimal sensitivity is `1/kappa`; inverse of [`kappa_of`].
pub fn norm_for_kappa(kappa: f64) -> Result<f64> {
    if !(kappa >= 4.0) || !kappa.is_finite() {
        return Err(Error::param(
            "kappa",
            format!("must be finite and >= 4, got {kappa}"),
        ));
    }
    // Solve p(1 - p) = 1/kappa for p >= 1/2, then S = logit(p).
    let root = (1.0 - 4.0 / kappa).sqrt();
    let p = 0.5 * (1.0 + root);
    let q = 0.5 * (1.0 - root);
    Ok(if q == 0.0 {
        f64::INFINITY
    } else {
        (p / q).ln()
    })
}

/// Exact-Taylor coefficients of the logistic function between two points:
/// `α(x,y) = ∫₀¹ μ̇(x + v(y−x)) dv` and `α̃(x,y) = ∫₀¹ (1−v) μ̇(x + v(y−x)) dv`.
pub fn alpha_coeffs(x: f64, y: f64) -> (f64, f64) {
    // μ̇ is even, so both coefficients are unchanged by (x, y) → (−x, −y).
    // On the negative side σ and softplus are small and relatively exact,
    // which keeps the differences below from cancelling.
    if x + y > 0.0 {
        return alpha_coeffs(-x, -y);
    }
    let h = y - x;
    if h.abs() < SERIES_THRESHOLD {
        return alpha_series(x, h);
    }
    let alpha = (sigmoid(y) - sigmoid(x)) / h;
    let alpha_tilde = (softplus(y) - softplus(x) - h * sigmoid(x)) / (h * h);
    (alpha, alpha_tilde)
}

const SERIES_THRESHOLD: f64 = 1e-2;

/// Taylor expansion of both coefficients around `x`, used where the closed
/// forms cancel catastrophically. Truncation error is below `h⁶ / 7!`.
fn alpha_series(x: f64, h: f64) -> (f64, f64) {
    let p = sigmoid(x);
    let q = dsigmoid(x);
    let s = 1.0 - 2.0 * p;
    // Derivatives μ^(1) .. μ^(6) as polynomials in q = μ̇ and s = 1 - 2μ.
    let derivs = [
        q,
        q * s,
        q * (1.0 - 6.0 * q),
        q * s * (1.0 - 12.0 * q),
        q * (1.0 - 30.0 * q + 120.0 * q * q),
        q * s * (1.0 - 60.0 * q + 360.0 * q * q),
    ];
    let mut alpha = 0.0;
    let mut alpha_tilde = 0.0;
    let mut hk = 1.0;
    let mut fact = 1.0; // (k+1)!
    for (k, d) in derivs.iter().enumerate() {
        fact *= (k + 1) as f64;
        alpha += d * hk / fact;
        alpha_tilde += d * hk / (fact * (k + 2) as f64);
        hk *= h;
    }
    (alpha, alpha_tilde)
}

/// Problem constants shared by every learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dim: usize,
    /// Upper bound on the norm of the unknown parameter.
    pub s: f64,
    /// Failure probability of the confidence statements.
    pub delta: f64,
    /// `1 / μ̇(S)`, always derived from `s`.
    pub kappa: f64,
}

impl ProblemParams {
    pub fn new(dim: usize, s: f64, delta: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::param(
                "S",
                format!("must be finite and positive, got {s}"),
            ));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::param(
                "delta",
                format!("must lie in (0, 1], got {delta}"),
            ));
        }
        Ok(Self {
            dim,
            s,
            delta,
            kappa: kappa_of(s)?,
        })
    }
}
