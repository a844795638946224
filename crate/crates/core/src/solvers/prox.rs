//! Proximal logistic program solved by projected gradient descent after a
//! Cholesky change of variables.
//!
//! The program is `min_{θ∈Θ} η‖θ − θ₀‖²_W + Σ_i ℓ(a_iᵀθ, u_i)`. Writing
//! `W = L Lᵀ` and `z = Lᵀθ` turns the quadratic into `η‖z − z₀‖²`, so the
//! objective in `z` is `2η`-strongly convex and `(2η + Σ‖a_i‖²_{W⁻¹}/4)`-smooth
//! regardless of how ill-conditioned `W` is. Ellipsoidal constraints stay
//! ellipsoidal under the map.

use std::cell::OnceCell;

use nalgebra::DVector;

use crate::cost;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{project_intersection, ConstraintSet, Ellipsoid, SpdMatrix};
use crate::logistic::sigmoid;

/// Accuracy requests below this value are raised to it.
pub const EPS_FLOOR: f64 = 1e-12;

/// A labelled arm entering the instantaneous loss.
pub type LossTerm = (DVector<f64>, u8);

#[derive(Debug, Clone, Copy)]
pub struct ProxProblem<'a> {
    /// Quadratic metric `W`.
    pub metric: &'a SpdMatrix,
    /// Proximal center `θ₀`.
    pub anchor: &'a DVector<f64>,
    /// Weight of the quadratic, `1/(2 + D)` for a diameter bound `D`.
    pub eta: f64,
    /// One loss term for the learning step, two (labels 0 and 1) for the
    /// label-averaged estimator.
    pub terms: &'a [LossTerm],
    pub constraint: &'a ConstraintSet,
    /// Target Euclidean distance to the exact minimizer.
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxSolution {
    pub theta: DVector<f64>,
    pub iterations: usize,
}

/// `⌈(9/4 + D/8) · ln(diam/eps)⌉`, at least 1.
pub fn pgd_iterations(diameter_bound: f64, diam: f64, eps: f64) -> usize {
    // Condition number of the preconditioned one-term program: 5/4 + D/8.
    pgd_iterations_for_condition(1.25 + diameter_bound / 8.0, diam, eps)
}

/// `⌈(1 + β/α) · ln(dist/eps)⌉`, at least 1: enough projected gradient steps
/// of size `1/β` to shrink an initial distance `dist` below `eps`.
pub fn pgd_iterations_for_condition(condition: f64, dist: f64, eps: f64) -> usize {
    if !(dist > eps) {
        return 1;
    }
    // Absorb rounding in the logarithm so exact integers are not bumped up.
    let n = ((1.0 + condition) * (dist / eps).ln() - 1e-9).ceil();
    (n as usize).max(1)
}

/// Solves the program to Euclidean accuracy `eps` (floored at [`EPS_FLOOR`]).
///
/// The iteration count is `⌈(1 + β/α) ln(R₀/ε_z)⌉`, where `R₀ = 2‖G(z₀)‖/α`
/// bounds the initial distance through the gradient mapping `G` at the warm
/// start, and `ε_z = ε·√λ_floor(W)` converts the target to `z`-coordinates.
pub fn solve_prox(p: &ProxProblem<'_>) -> Result<ProxSolution> {
    let mut solver = Pgd::new(p)?;
    let eps = p.eps.max(EPS_FLOOR);
    let z0 = solver.initial()?;
    let z1 = solver.step(&z0)?;
    let gap = solver.beta * (&z0 - &z1).norm();
    let dist = 2.0 * gap / solver.alpha;
    let eps_z = eps * p.metric.floor().sqrt();
    let iterations = pgd_iterations_for_condition(solver.beta / solver.alpha, dist, eps_z);
    let z = solver.run(z1, iterations - 1)?;
    Ok(ProxSolution {
        theta: p.metric.solve_upper(&z)?,
        iterations,
    })
}

/// Runs exactly `iterations` projected gradient steps from the warm start.
pub fn solve_prox_iterations(p: &ProxProblem<'_>, iterations: usize) -> Result<ProxSolution> {
    let mut solver = Pgd::new(p)?;
    let z0 = solver.initial()?;
    let z = solver.run(z0, iterations)?;
    Ok(ProxSolution {
        theta: p.metric.solve_upper(&z)?,
        iterations,
    })
}

/// Objective value at `theta`, in the original coordinates.
pub fn prox_objective(p: &ProxProblem<'_>, theta: &DVector<f64>) -> Result<f64> {
    let diff = theta - p.anchor;
    let mut value = p.eta * p.metric.mahalanobis_sq(&diff)?;
    for (arm, label) in p.terms {
        value += crate::logistic::logloss(arm.dot(theta), *label)?.value;
    }
    Ok(value)
}

/// Projection of `theta` onto the constraint in the `‖·‖_W` geometry.
pub fn project_in_metric(
    metric: &SpdMatrix,
    set: &ConstraintSet,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim(metric.dim(), theta.len())?;
    check_dim(metric.dim(), set.dim())?;
    if set.contains(theta)? {
        return Ok(theta.clone());
    }
    let projector = FactorProjector::new(metric, set);
    let z = projector.project(&metric.factor_t_mul(theta)?)?;
    metric.solve_upper(&z)
}

/// Extreme curvatures `(α, β)` of the objective in factor coordinates.
pub fn prox_curvature_bounds(p: &ProxProblem<'_>) -> Result<(f64, f64)> {
    let mut beta = 2.0 * p.eta;
    for (arm, _) in p.terms {
        beta += p.metric.inv_norm_sq(arm)? / 4.0;
    }
    Ok((2.0 * p.eta, beta))
}

struct Pgd<'a> {
    problem: &'a ProxProblem<'a>,
    z_anchor: DVector<f64>,
    /// `L⁻¹ a_i` for each term.
    directions: Vec<(DVector<f64>, f64)>,
    alpha: f64,
    beta: f64,
    projector: FactorProjector<'a>,
}

impl<'a> Pgd<'a> {
    fn new(p: &'a ProxProblem<'a>) -> Result<Self> {
        let d = p.metric.dim();
        check_dim(d, p.anchor.len())?;
        check_dim(d, p.constraint.dim())?;
        if !(p.eta > 0.0 && p.eta <= 0.5) {
            return Err(Error::param(
                "eta",
                format!("must lie in (0, 1/2], got {}", p.eta),
            ));
        }
        if !(p.eps > 0.0) || !p.eps.is_finite() {
            return Err(Error::param(
                "eps",
                format!("must be finite and positive, got {}", p.eps),
            ));
        }
        if p.terms.is_empty() || p.terms.len() > 2 {
            return Err(Error::param(
                "terms",
                format!("expected 1 or 2 loss terms, got {}", p.terms.len()),
            ));
        }
        let mut directions = Vec::with_capacity(p.terms.len());
        let mut beta = 2.0 * p.eta;
        for (arm, label) in p.terms {
            check_dim(d, arm.len())?;
            if *label > 1 {
                return Err(Error::InvalidReward(*label));
            }
            let b = p.metric.solve_lower(arm)?;
            beta += b.norm_squared() / 4.0;
            directions.push((b, f64::from(*label)));
        }
        Ok(Self {
            problem: p,
            z_anchor: p.metric.factor_t_mul(p.anchor)?,
            directions,
            alpha: 2.0 * p.eta,
            beta,
            projector: FactorProjector::new(p.metric, p.constraint),
        })
    }

    fn initial(&self) -> Result<DVector<f64>> {
        self.projector.project(&self.z_anchor)
    }

    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut g = (z - &self.z_anchor) * (2.0 * self.problem.eta);
        for (b, label) in &self.directions {
            g.axpy(sigmoid(b.dot(z)) - label, b, 1.0);
        }
        g
    }

    fn step(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let d = z.len();
        cost::charge(d * d);
        let g = self.gradient(z);
        self.projector.project(&(z - g / self.beta))
    }

    fn run(&mut self, mut z: DVector<f64>, iterations: usize) -> Result<DVector<f64>> {
        for _ in 0..iterations {
            z = self.step(&z)?;
        }
        Ok(z)
    }
}

/// Projection onto `{z : L⁻ᵀz ∈ Θ}`. Membership is tested in the original
/// coordinates; the transformed ellipsoids are only built when a point
/// actually has to move.
struct FactorProjector<'a> {
    metric: &'a SpdMatrix,
    set: &'a ConstraintSet,
    transformed: OnceCell<Result<Transformed, String>>,
}

enum Transformed {
    One(Ellipsoid),
    Two(Ellipsoid, Ellipsoid),
}

impl<'a> FactorProjector<'a> {
    fn new(metric: &'a SpdMatrix, set: &'a ConstraintSet) -> Self {
        Self {
            metric,
            set,
            transformed: OnceCell::new(),
        }
    }

    fn transformed(&self) -> Result<&Transformed> {
        self.transformed
            .get_or_init(|| self.build().map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|msg| Error::param("constraint", msg.clone()))
    }

    fn build(&self) -> Result<Transformed> {
        let d = self.metric.dim();
        let ball = |radius: f64| -> Result<Ellipsoid> {
            Ellipsoid::new(
                DVector::zeros(d),
                SpdMatrix::scaled_identity(d, 1.0)?,
                radius * radius,
            )?
            .in_factor_coordinates(self.metric)
        };
        Ok(match self.set {
            ConstraintSet::Ball { radius, .. } => Transformed::One(ball(*radius)?),
            ConstraintSet::Ellipsoid(e) => Transformed::One(e.in_factor_coordinates(self.metric)?),
            ConstraintSet::Intersection(e, radius) => {
                Transformed::Two(e.in_factor_coordinates(self.metric)?, ball(*radius)?)
            }
        })
    }

    fn project(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let theta = self.metric.solve_upper(z)?;
        if self.set.contains(&theta)? {
            return Ok(z.clone());
        }
        match self.transformed()? {
            Transformed::One(e) => e.project(z),
            Transformed::Two(e, b) => project_intersection(z, e, b),
        }
    }
}
