use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};

use crate::cost;
use crate::error::{check_dim, Error, Result};
use crate::linalg::SpdMatrix;

/// Iteration cap of the one-dimensional dual search.
pub const PROJECTION_MAX_ITER: usize = 1_000;
/// Quadrupling steps allowed when bracketing a multiplier (up to 4^600).
const BRACKET_MAX_GROWTH: usize = 600;

/// `{θ : ‖θ − c‖²_M ≤ r}`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: SpdMatrix,
    radius_sq: f64,
    eigen: OnceLock<SymmetricEigen<f64, Dyn>>,
}

impl Ellipsoid {
    pub fn new(center: DVector<f64>, shape: SpdMatrix, radius_sq: f64) -> Result<Self> {
        check_dim(shape.dim(), center.len())?;
        if !(radius_sq > 0.0) || !radius_sq.is_finite() {
            return Err(Error::param(
                "radius_sq",
                format!("must be finite and positive, got {radius_sq}"),
            ));
        }
        Ok(Self {
            center,
            shape,
            radius_sq,
            eigen: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &SpdMatrix {
        &self.shape
    }

    pub fn radius_sq(&self) -> f64 {
        self.radius_sq
    }

    /// `‖θ − c‖²_M`.
    pub fn level(&self, theta: &DVector<f64>) -> Result<f64> {
        self.shape.mahalanobis_sq(&(theta - &self.center))
    }

    pub fn contains(&self, theta: &DVector<f64>) -> Result<bool> {
        Ok(self.level(theta)? <= self.radius_sq)
    }

    /// Membership with a relative slack on the quadratic form.
    pub fn contains_within(&self, theta: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self.level(theta)? <= self.radius_sq + tol * self.radius_sq.max(1.0))
    }

    fn eigen(&self) -> &SymmetricEigen<f64, Dyn> {
        self.eigen.get_or_init(|| self.shape.eigen())
    }

    /// Euclidean projection onto the ellipsoid.
    ///
    /// Outside points map to `c + (I + λ⋆M)⁻¹(x − c)` where `λ⋆ > 0` is the root
    /// of the decreasing dual function `g(λ) = ‖(I + λM)⁻¹(x − c)‖²_M − r`.
    /// The root is bracketed by `[0, (‖x − c‖_M/√r − 1)/λ_min(M) + 1]` and
    /// found by Newton steps that fall back to bisection when they leave
    /// the bracket.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        let offset = x - &self.center;
        let level = self.shape.mahalanobis_sq(&offset)?;
        if level <= self.radius_sq {
            return Ok(x.clone());
        }
        let eig = self.eigen();
        let d = self.dim();
        cost::charge(d * d);
        let u = eig.eigenvectors.tr_mul(&offset);
        let lam = &eig.eigenvalues;
        let r = self.radius_sq;

        let g = |mu: f64| -> (f64, f64) {
            let mut val = -r;
            let mut deriv = 0.0;
            for i in 0..d {
                let den = 1.0 + mu * lam[i];
                let t = lam[i] * u[i] * u[i] / (den * den);
                val += t;
                deriv -= 2.0 * t * lam[i] / den;
            }
            (val, deriv)
        };

        let lam_min = lam.min().max(f64::MIN_POSITIVE);
        let mut lo = 0.0;
        let mut hi = ((level / r).sqrt() - 1.0) / lam_min + 1.0;
        let tol = 1e-10 * r.max(1.0);
        let mut mu = 0.0;
        let mut converged = false;
        for _ in 0..PROJECTION_MAX_ITER {
            let (val, deriv) = g(mu);
            if val.abs() <= tol {
                converged = true;
                break;
            }
            if val > 0.0 {
                lo = mu;
            } else {
                hi = mu;
            }
            let newton = mu - val / deriv;
            mu = if deriv < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                what: "ellipsoid projection",
                iterations: PROJECTION_MAX_ITER,
            });
        }
        let scaled = DVector::from_fn(d, |i, _| u[i] / (1.0 + mu * lam[i]));
        let mut step = &eig.eigenvectors * scaled;
        // Pull residual rounding back onto the boundary.
        let reached = self.shape.mahalanobis_sq(&step)?;
        if reached > r {
            step *= (r / reached).sqrt();
        }
        Ok(&self.center + step)
    }

    /// Same set expressed in the coordinates `z = Lᵀθ`, where `L` is the
    /// Cholesky factor of `metric`: `{z : ‖z − Lᵀc‖²_{L⁻¹ M L⁻ᵀ} ≤ r}`.
    pub fn in_factor_coordinates(&self, metric: &SpdMatrix) -> Result<Ellipsoid> {
        check_dim(metric.dim(), self.dim())?;
        let d = self.dim();
        let linv = metric
            .cholesky_factor()
            .solve_lower_triangular(&nalgebra::DMatrix::identity(d, d))
            .ok_or(Error::NotPositiveDefinite)?;
        cost::charge(d * d * d);
        let shape = &linv * self.shape.matrix() * linv.transpose();
        Ellipsoid::new(
            metric.factor_t_mul(&self.center)?,
            SpdMatrix::from_matrix(shape)?,
            self.radius_sq,
        )
    }
}

/// Admissible parameter sets used by the learners.
#[derive(Debug, Clone)]
pub enum ConstraintSet {
    /// `{θ : ‖θ‖ ≤ radius}`.
    Ball {
        dim: usize,
        radius: f64,
    },
    Ellipsoid(Ellipsoid),
    /// Ellipsoid intersected with the centered ball of the given radius.
    Intersection(Ellipsoid, f64),
}

impl ConstraintSet {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::param(
                "radius",
                format!("must be finite and positive, got {radius}"),
            ));
        }
        Ok(ConstraintSet::Ball { dim, radius })
    }

    /// Validates that the intersection is nonempty: either the ellipsoid's
    /// center lies in the ball or the origin lies in the ellipsoid.
    pub fn intersection(ellipsoid: Ellipsoid, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::param(
                "radius",
                format!("must be finite and positive, got {radius}"),
            ));
        }
        let center_in_ball = ellipsoid.center().norm() <= radius;
        let origin_in_ellipsoid = ellipsoid.contains(&DVector::zeros(ellipsoid.dim()))?;
        if !center_in_ball && !origin_in_ellipsoid {
            return Err(Error::EmptyConstraint(format!(
                "ellipsoid centered at norm {:.3e} misses the ball of radius {radius}",
                ellipsoid.center().norm()
            )));
        }
        Ok(ConstraintSet::Intersection(ellipsoid, radius))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Ball { dim, .. } => *dim,
            ConstraintSet::Ellipsoid(e) | ConstraintSet::Intersection(e, _) => e.dim(),
        }
    }

    pub fn contains(&self, theta: &DVector<f64>) -> Result<bool> {
        self.contains_within(theta, 0.0)
    }

    pub fn contains_within(&self, theta: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim(), theta.len())?;
        Ok(match self {
            ConstraintSet::Ball { radius, .. } => ball_contains(theta, *radius, tol),
            ConstraintSet::Ellipsoid(e) => e.contains_within(theta, tol)?,
            ConstraintSet::Intersection(e, radius) => {
                ball_contains(theta, *radius, tol) && e.contains_within(theta, tol)?
            }
        })
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        match self {
            ConstraintSet::Ball { radius, .. } => Ok(project_ball(x, *radius)),
            ConstraintSet::Ellipsoid(e) => e.project(x),
            ConstraintSet::Intersection(e, radius) => {
                if ball_contains(x, *radius, 0.0) && e.contains(x)? {
                    return Ok(x.clone());
                }
                let ball = Ellipsoid::new(
                    DVector::zeros(x.len()),
                    SpdMatrix::scaled_identity(x.len(), 1.0)?,
                    radius * radius,
                )?;
                project_intersection(x, e, &ball)
            }
        }
    }

    /// Upper bound on `max_a max_{θ₁,θ₂} aᵀ(θ₁ − θ₂)` over the arm geometry.
    pub fn diam_under_arms(&self, arms: ArmGeometry<'_>) -> Result<f64> {
        if let ArmGeometry::Finite(list) = arms {
            if list.is_empty() {
                return Err(Error::EmptyArmSet);
            }
        }
        match self {
            ConstraintSet::Ball { radius, .. } => ball_diameter(*radius, arms),
            ConstraintSet::Ellipsoid(e) => ellipsoid_diameter(e, arms),
            ConstraintSet::Intersection(e, radius) => {
                Ok(ellipsoid_diameter(e, arms)?.min(ball_diameter(*radius, arms)?))
            }
        }
    }
}

/// Arm sets as seen by geometric bounds.
#[derive(Debug, Clone, Copy)]
pub enum ArmGeometry<'a> {
    Finite(&'a [DVector<f64>]),
    UnitBall,
}

fn ball_contains(theta: &DVector<f64>, radius: f64, tol: f64) -> bool {
    theta.norm_squared() <= radius * radius + tol * (radius * radius).max(1.0)
}

pub fn project_ball(x: &DVector<f64>, radius: f64) -> DVector<f64> {
    let n = x.norm();
    if n <= radius {
        x.clone()
    } else {
        x * (radius / n)
    }
}

fn ball_diameter(radius: f64, arms: ArmGeometry<'_>) -> Result<f64> {
    Ok(match arms {
        ArmGeometry::Finite(list) => {
            2.0 * radius * list.iter().map(|a| a.norm()).fold(0.0, f64::max)
        }
        ArmGeometry::UnitBall => 2.0 * radius,
    })
}

fn ellipsoid_diameter(e: &Ellipsoid, arms: ArmGeometry<'_>) -> Result<f64> {
    let root = e.radius_sq().sqrt();
    match arms {
        ArmGeometry::Finite(list) => {
            let mut best = 0.0f64;
            for a in list {
                best = best.max(e.shape().inv_norm_sq(a)?);
            }
            Ok(2.0 * root * best.sqrt())
        }
        ArmGeometry::UnitBall => {
            let lam_min = e.shape().min_eigenvalue();
            Ok(2.0 * (e.radius_sq() / lam_min).sqrt())
        }
    }
}

/// Euclidean projection onto `A ∩ B` for two ellipsoids with a nonempty
/// intersection.
///
/// Unless one single-set projection already lands in the other set, both
/// constraints are active and the answer is
/// `θ(λ, μ) = (I + λM_A + μM_B)⁻¹(x + λM_A c_A + μM_B c_B)` with positive
/// multipliers. For fixed `μ` the level of `A` along `θ(·, μ)` is
/// nonincreasing in `λ`, and the level of `B` along the inner solution is
/// nonincreasing in `μ`, so two nested bracketed root searches find them.
/// Unlike alternating projections this does not slow down when the sets are
/// nearly tangent.
pub fn project_intersection(
    x: &DVector<f64>,
    a: &Ellipsoid,
    b: &Ellipsoid,
) -> Result<DVector<f64>> {
    check_dim(a.dim(), x.len())?;
    check_dim(b.dim(), x.len())?;
    if a.contains(x)? && b.contains(x)? {
        return Ok(x.clone());
    }
    let pa = a.project(x)?;
    if b.contains(&pa)? {
        return Ok(pa);
    }
    let pb = b.project(x)?;
    if a.contains(&pb)? {
        return Ok(pb);
    }

    let d = x.len();
    let ma = a.shape().matrix();
    let mb = b.shape().matrix();
    let ma_ca = ma * a.center();
    let mb_cb = mb * b.center();
    let theta = |lam: f64, mu: f64| -> Result<DVector<f64>> {
        cost::charge(d * d * d);
        let sys = DMatrix::identity(d, d) + ma * lam + mb * mu;
        let rhs = x + &ma_ca * lam + &mb_cb * mu;
        let chol = sys.cholesky().ok_or(Error::NotPositiveDefinite)?;
        Ok(chol.solve(&rhs))
    };
    let inner = |mu: f64| -> Result<DVector<f64>> {
        let excess = |lam: f64| -> Result<f64> { Ok(a.level(&theta(lam, mu)?)? - a.radius_sq()) };
        let f0 = excess(0.0)?;
        if f0 <= 0.0 {
            return theta(0.0, mu);
        }
        let lam = decreasing_root(excess, f0, a.radius_sq())?;
        theta(lam, mu)
    };
    let outer = |mu: f64| -> Result<f64> { Ok(b.level(&inner(mu)?)? - b.radius_sq()) };
    let h0 = outer(0.0)?;
    if h0 <= 0.0 {
        return inner(0.0);
    }
    let mu = decreasing_root(outer, h0, b.radius_sq())?;
    inner(mu)
}

/// Root of a continuous nonincreasing `f` on `[0, ∞)` with `f(0) = f0 > 0`:
/// geometric bracketing, then the Illinois variant of regula falsi.
fn decreasing_root<F>(mut f: F, f0: f64, scale: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let tol = 1e-13 * scale.max(1.0);
    let (mut lo, mut flo) = (0.0, f0);
    let (mut hi, mut fhi) = (1.0, f(1.0)?);
    let mut grown = 0;
    while fhi > 0.0 {
        if grown == BRACKET_MAX_GROWTH {
            // Limit point still outside: the sets are tangent or disjoint.
            if fhi <= 1e-8 * scale.max(1.0) {
                return Ok(hi);
            }
            return Err(Error::EmptyConstraint("ellipsoids do not intersect".into()));
        }
        (lo, flo) = (hi, fhi);
        hi *= 4.0;
        fhi = f(hi)?;
        grown += 1;
    }
    if fhi.abs() <= tol {
        return Ok(hi);
    }
    let mut side = 0i8;
    for _ in 0..PROJECTION_MAX_ITER {
        let mid = (lo * fhi - hi * flo) / (fhi - flo);
        let mid = if mid > lo && mid < hi {
            mid
        } else {
            0.5 * (lo + hi)
        };
        let fm = f(mid)?;
        if fm.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(mid);
        }
        if fm > 0.0 {
            (lo, flo) = (mid, fm);
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            (hi, fhi) = (mid, fm);
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::NoConvergence {
        what: "intersection projection",
        iterations: PROJECTION_MAX_ITER,
    })
}
