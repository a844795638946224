//! Randomized invariant suites, runnable from the command line.
//!
//! Each suite draws its own inputs from a seeded generator and reports the
//! number of violations it found.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::learners::{ada_step_with, ecolog_step, ofu_select, AdaState};
use crate::linalg::{ArmGeometry, ConstraintSet, Ellipsoid, SpdMatrix};
use crate::logistic::{alpha_coeffs, dsigmoid, logloss, ProblemParams};
use crate::schedule::{RadiusSchedule, ScheduleKind};
use crate::sim::{design_diagnostics, sample_in_ball};
use crate::solvers::{prox_curvature_bounds, solve_prox, solve_prox_iterations, ProxProblem};

/// Slack for comparing quantities that are equal in exact arithmetic.
const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub samples: usize,
    pub violations: usize,
    pub detail: String,
}

impl CheckOutcome {
    fn new(
        name: &'static str,
        samples: usize,
        violations: usize,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name,
            samples,
            violations,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}/{} violations",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.violations,
            self.samples
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(0xC0FFEE ^ salt);
    r
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> SpdMatrix {
    let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    SpdMatrix::from_matrix(&b * b.transpose() + DMatrix::identity(d, d) * 0.1)
        .expect("shifted Gram matrix is SPD")
}

/// Self-concordance comparisons between `α`, `α̃` and `μ̇`.
pub fn self_concordance(seed: u64, samples: usize) -> CheckOutcome {
    let mut r = rng(seed, 1);
    let mut bad = 0;
    for _ in 0..samples {
        let x: f64 = r.random_range(-15.0..15.0);
        let y = x + r.random_range(-10.0..10.0);
        let gap = (x - y).abs();
        let (a, at) = alpha_coeffs(x, y);
        let (mx, my) = (dsigmoid(x), dsigmoid(y));
        let ok = a >= mx / (1.0 + gap) * (1.0 - ROUNDING)
            && a >= my / (1.0 + gap) * (1.0 - ROUNDING)
            && at >= mx / (2.0 + gap) * (1.0 - ROUNDING)
            && mx <= my * gap.exp() * (1.0 + ROUNDING);
        bad += usize::from(!ok);
    }
    CheckOutcome::new("self-concordance", samples, bad, "")
}

/// `ℓ(z) ≥ ℓ(z_r) + ℓ'(z_r)(z − z_r) + μ̇(z_r)/(2+D)·(z − z_r)²` for `|z − z_r| ≤ D`.
pub fn local_quadratic_bound(seed: u64, samples: usize) -> CheckOutcome {
    let mut r = rng(seed, 2);
    let mut bad = 0;
    for _ in 0..samples {
        let d = r.random_range(1..6);
        let s: f64 = r.random_range(0.5..6.0);
        let a = sample_in_ball(&mut r, d);
        let theta = sample_in_ball(&mut r, d) * s;
        let theta_r = sample_in_ball(&mut r, d) * s;
        let label = r.random_range(0..=1u8);
        let (z, zr) = (a.dot(&theta), a.dot(&theta_r));
        let diam = (z - zr).abs() * r.random_range(1.0..2.0);
        let lhs = logloss(z, label).expect("binary label").value;
        let base = logloss(zr, label).expect("binary label");
        let rhs =
            base.value + base.grad * (z - zr) + dsigmoid(zr) / (2.0 + diam) * (z - zr).powi(2);
        bad += usize::from(lhs < rhs - ROUNDING * (1.0 + lhs.abs()));
    }
    CheckOutcome::new("local quadratic lower bound", samples, bad, "")
}

/// All six schedules are nondecreasing in `t` and nonincreasing in `δ`.
pub fn schedule_monotonicity(t_max: usize) -> CheckOutcome {
    let mut bad = 0;
    let mut samples = 0;
    for (d, s, delta) in [(1, 1.0, 0.1), (2, 5.986, 0.05), (5, 3.0, 0.01)] {
        let p = ProblemParams::new(d, s, delta).expect("valid constants");
        let looser =
            RadiusSchedule::new(ProblemParams::new(d, s, delta * 2.0).expect("valid constants"));
        let sched = RadiusSchedule::new(p);
        for kind in ScheduleKind::ALL {
            let mut prev = f64::NEG_INFINITY;
            for t in 1..=t_max {
                let v = sched.eval(kind, t).expect("t >= 1");
                samples += 1;
                bad += usize::from(v < prev || looser.eval(kind, t).expect("t >= 1") > v);
                prev = v;
            }
        }
    }
    CheckOutcome::new("schedule monotonicity", samples, bad, "")
}

/// Incrementally maintained factor and inverse against a fresh factorization.
pub fn incremental_factorization(seed: u64, dim: usize, updates: usize) -> CheckOutcome {
    let mut r = rng(seed, 3);
    let mut m = SpdMatrix::scaled_identity(dim, 1.0).expect("positive scale");
    let mut dense = DMatrix::identity(dim, dim);
    for _ in 0..updates {
        let v = sample_in_ball(&mut r, dim);
        let w: f64 = r.random_range(0.0..1.0);
        m.rank1_update(&v, w).expect("nonnegative weight");
        dense.ger(w, &v, &v, 1.0);
    }
    let fresh = SpdMatrix::from_matrix(dense.clone()).expect("SPD");
    let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).abs().max() / b.abs().max();
    let errs = [
        rel(m.matrix(), &dense),
        rel(m.cholesky_factor(), fresh.cholesky_factor()),
        rel(m.inverse(), fresh.inverse()),
        (m.matrix() * m.inverse() - DMatrix::identity(dim, dim))
            .abs()
            .max(),
    ];
    let bad = errs.iter().filter(|e| **e > 1e-8).count();
    CheckOutcome::new(
        "incremental factorization",
        errs.len(),
        bad,
        format!("max error {:.2e}", errs.iter().cloned().fold(0.0, f64::max)),
    )
}

/// Projection onto ellipsoids is idempotent and non-expansive.
pub fn projection_properties(seed: u64, samples: usize) -> CheckOutcome {
    let mut r = rng(seed, 4);
    let mut bad = 0;
    for _ in 0..samples {
        let d = r.random_range(1..5);
        let shape = random_spd(&mut r, d);
        let center = DVector::from_fn(d, |_, _| r.random_range(-1.0..1.0));
        let e = Ellipsoid::new(center, shape, r.random_range(0.1..2.0)).expect("valid ellipsoid");
        let x = DVector::from_fn(d, |_, _| r.random_range(-4.0..4.0));
        let y = DVector::from_fn(d, |_, _| r.random_range(-4.0..4.0));
        let (Ok(px), Ok(py)) = (e.project(&x), e.project(&y)) else {
            bad += 1;
            continue;
        };
        let ppx = e.project(&px).unwrap_or_else(|_| x.clone());
        let idempotent = (&ppx - &px).norm() <= 1e-9 * (1.0 + px.norm());
        let contractive = (&px - &py).norm() <= (&x - &y).norm() * (1.0 + 1e-9) + 1e-12;
        let inside = e.contains_within(&px, 1e-9).unwrap_or(false);
        bad += usize::from(!(idempotent && contractive && inside));
    }
    CheckOutcome::new("ellipsoid projection", samples, bad, "")
}

/// `Σ ‖x_t‖²_{V_{t−1}⁻¹} ≤ 2d(1+X²) log(1 + T X²/(dλ))` along random sequences.
pub fn elliptical_potential(
    seed: u64,
    dim: usize,
    horizon: usize,
    sequences: usize,
) -> CheckOutcome {
    let mut r = rng(seed, 5);
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..sequences {
        let lambda: f64 = r.random_range(1.0..3.0);
        let x_max: f64 = 1.0;
        let mut v = SpdMatrix::scaled_identity(dim, lambda).expect("positive scale");
        let mut sum = 0.0;
        for t in 1..=horizon {
            let x = sample_in_ball(&mut r, dim) * x_max;
            sum += v.inv_norm_sq(&x).expect("dimensions agree");
            v.rank1_update(&x, 1.0).expect("unit weight");
            let bound = 2.0
                * dim as f64
                * (1.0 + x_max * x_max)
                * (1.0 + t as f64 * x_max * x_max / (dim as f64 * lambda)).ln();
            worst = worst.max(sum / bound);
            bad += usize::from(sum > bound * (1.0 + ROUNDING));
        }
    }
    CheckOutcome::new(
        "elliptical potential",
        sequences * horizon,
        bad,
        format!("max sum/bound {worst:.3}"),
    )
}

/// `det V_t ≤ (λ + t X²/d)^d`, evaluated in log space from the Cholesky factor.
pub fn determinant_trace(seed: u64, dim: usize, horizon: usize, sequences: usize) -> CheckOutcome {
    let mut r = rng(seed, 6);
    let mut bad = 0;
    for _ in 0..sequences {
        let lambda: f64 = r.random_range(0.5..3.0);
        let mut v = SpdMatrix::scaled_identity(dim, lambda).expect("positive scale");
        for t in 1..=horizon {
            let x = sample_in_ball(&mut r, dim);
            v.rank1_update(&x, 1.0).expect("unit weight");
            let bound = dim as f64 * (lambda + t as f64 / dim as f64).ln();
            bad += usize::from(v.log_det() > bound + ROUNDING * bound.abs().max(1.0));
        }
    }
    CheckOutcome::new("determinant-trace", sequences * horizon, bad, "")
}

/// `H_t(θ) ⪰ V_t` whenever `‖θ‖ ≤ S`.
pub fn curvature_dominance(seed: u64, histories: usize) -> CheckOutcome {
    let mut r = rng(seed, 7);
    let mut bad = 0;
    for _ in 0..histories {
        let d = r.random_range(1..6);
        let s: f64 = r.random_range(0.5..6.0);
        let kappa = crate::logistic::kappa_of(s).expect("nonnegative norm");
        let arms: Vec<_> = (0..r.random_range(1..200))
            .map(|_| sample_in_ball(&mut r, d))
            .collect();
        let theta = sample_in_ball(&mut r, d) * s;
        let (h, v) = design_diagnostics(&arms, &theta, 1.0, kappa);
        let gap = (h - v).symmetric_eigenvalues().min();
        bad += usize::from(gap < -1e-10);
    }
    CheckOutcome::new("curvature dominance", histories, bad, "")
}

/// Inner solver lands within `ε` of a run with ten times its budget and
/// respects the constraint.
pub fn prox_accuracy(seed: u64, problems: usize, max_dim: usize) -> CheckOutcome {
    let mut r = rng(seed, 8);
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..problems {
        let d = r.random_range(1..=max_dim);
        let mut w = SpdMatrix::scaled_identity(d, 1.0).expect("positive scale");
        for _ in 0..r.random_range(0..50) {
            let a = sample_in_ball(&mut r, d);
            w.rank1_update(&a, r.random_range(0.0..0.25))
                .expect("nonnegative weight");
        }
        let set = match r.random_range(0..3) {
            0 => ConstraintSet::ball(d, r.random_range(0.5..5.0)).expect("positive radius"),
            1 => {
                let c = sample_in_ball(&mut r, d) * 0.5;
                ConstraintSet::Ellipsoid(
                    Ellipsoid::new(c, random_spd(&mut r, d), r.random_range(0.1..3.0))
                        .expect("valid"),
                )
            }
            _ => {
                let c = sample_in_ball(&mut r, d) * 0.5;
                let e = Ellipsoid::new(c, random_spd(&mut r, d), r.random_range(0.1..3.0))
                    .expect("valid");
                ConstraintSet::intersection(e, r.random_range(1.0..3.0))
                    .expect("center inside the ball")
            }
        };
        let anchor = set
            .project(&(sample_in_ball(&mut r, d) * 3.0))
            .expect("projection converges");
        let arm = sample_in_ball(&mut r, d);
        let two = r.random_bool(0.3);
        let terms = if two {
            vec![(arm.clone(), 0), (arm, 1)]
        } else {
            vec![(arm, r.random_range(0..=1u8))]
        };
        let eps = 10f64.powf(r.random_range(-8.0..-2.0));
        let p = ProxProblem {
            metric: &w,
            anchor: &anchor,
            eta: 1.0 / (2.0 + r.random_range(0.0..4.0)),
            terms: &terms,
            constraint: &set,
            eps,
        };
        let ok = (|| -> Result<bool> {
            let sol = solve_prox(&p)?;
            let reference = solve_prox_iterations(&p, 10 * sol.iterations)?;
            let err = (&sol.theta - &reference.theta).norm();
            worst = worst.max(err / eps);
            Ok(err <= eps && set.contains_within(&sol.theta, 1e-8)?)
        })()
        .unwrap_or(false);
        bad += usize::from(!ok);
    }
    CheckOutcome::new(
        "proximal solver accuracy",
        problems,
        bad,
        format!("max error/eps {worst:.3}"),
    )
}

/// Curvature ratio of the preconditioned program stays within its bounds.
pub fn prox_conditioning(seed: u64, problems: usize) -> CheckOutcome {
    let mut r = rng(seed, 9);
    let mut bad = 0;
    for _ in 0..problems {
        let d = r.random_range(1..8);
        let mut w = SpdMatrix::scaled_identity(d, 1.0).expect("positive scale");
        for _ in 0..r.random_range(0..30) {
            let a = sample_in_ball(&mut r, d);
            w.rank1_update(&a, r.random_range(0.0..0.25))
                .expect("nonnegative weight");
        }
        let diam: f64 = r.random_range(0.0..4.0);
        let anchor = DVector::zeros(d);
        let set = ConstraintSet::ball(d, 1.0).expect("positive radius");
        let terms = [(sample_in_ball(&mut r, d), 1u8)];
        let p = ProxProblem {
            metric: &w,
            anchor: &anchor,
            eta: 1.0 / (2.0 + diam),
            terms: &terms,
            constraint: &set,
            eps: 1e-6,
        };
        let Ok((alpha, beta)) = prox_curvature_bounds(&p) else {
            bad += 1;
            continue;
        };
        let ratio = alpha / beta;
        let lower = 1.0 / (1.25 + diam / 8.0);
        bad += usize::from(!(ratio >= 0.9 * lower && ratio <= 1.1));
    }
    CheckOutcome::new("preconditioned conditioning", problems, bad, "")
}

/// The adaptive learner with acceptance forced reproduces the plain learner
/// bit for bit, and the metric only grows.
pub fn forced_acceptance_equivalence(seed: u64, rounds: usize) -> CheckOutcome {
    let mut r = rng(seed, 10);
    let params = ProblemParams::new(3, 2.0, 0.05).expect("valid constants");
    let mut ada = AdaState::new(params).expect("valid constants");
    let mut plain = ada.inner.clone();
    let mut bad = 0;
    for _ in 0..rounds {
        let arm = sample_in_ball(&mut r, 3);
        let reward = r.random_range(0..=1u8);
        let floor_before = plain.w.min_eigenvalue();
        let ok = ada_step_with(&mut ada, &arm, reward, ArmGeometry::UnitBall, Some(true)).is_ok()
            && ecolog_step(&mut plain, &arm, reward).is_ok()
            && ada.inner.theta == plain.theta
            && ada.inner.w.matrix() == plain.w.matrix()
            && plain.w.min_eigenvalue() >= floor_before * (1.0 - ROUNDING)
            && {
                let weight = dsigmoid(arm.dot(&plain.theta));
                weight > 0.0 && weight <= 0.25
            };
        bad += usize::from(!ok);
    }
    CheckOutcome::new("forced acceptance equivalence", rounds, bad, "")
}

/// Optimistic selection is unchanged by score-preserving rescalings.
pub fn optimistic_rescaling(seed: u64, samples: usize) -> CheckOutcome {
    let mut r = rng(seed, 11);
    let mut bad = 0;
    for _ in 0..samples {
        let d = r.random_range(1..6);
        let arms: Vec<_> = (0..r.random_range(1..30))
            .map(|_| sample_in_ball(&mut r, d))
            .collect();
        let w = random_spd(&mut r, d);
        let theta = DVector::from_fn(d, |_, _| r.random_range(-2.0..2.0));
        let radius: f64 = r.random_range(0.0..4.0);
        let c: f64 = r.random_range(0.1..10.0);
        let s: f64 = r.random_range(0.1..10.0);
        let scaled_w = SpdMatrix::from_matrix(w.matrix() * s).expect("SPD");
        let base = ofu_select(&theta, &w, radius, &arms);
        // θ → cθ and γ → c²γ scale every score by c; (W, γ) → (sW, sγ) leaves them unchanged.
        let a = ofu_select(&(&theta * c), &w, radius * c * c, &arms);
        let b = ofu_select(&theta, &scaled_w, radius * s, &arms);
        let ok = match (base, a, b) {
            (Ok(x), Ok(y), Ok(z)) => {
                let near_tie =
                    arms.iter()
                        .enumerate()
                        .filter(|(i, _)| *i != x.0)
                        .any(|(_, arm)| {
                            let score = arm.dot(&theta)
                                + radius.sqrt() * w.inv_norm_sq(arm).unwrap_or(0.0).sqrt();
                            (score - x.1).abs() < 1e-9 * (1.0 + x.1.abs())
                        });
                near_tie || (x.0 == y.0 && x.0 == z.0)
            }
            _ => false,
        };
        bad += usize::from(!ok);
    }
    CheckOutcome::new("optimistic selection rescaling", samples, bad, "")
}

/// Every suite at its default size.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        self_concordance(seed, 10_000),
        local_quadratic_bound(seed, 10_000),
        schedule_monotonicity(100_000),
        incremental_factorization(seed, 10, 500),
        projection_properties(seed, 500),
        elliptical_potential(seed, 5, 1000, 5),
        determinant_trace(seed, 5, 1000, 5),
        curvature_dominance(seed, 50),
        prox_accuracy(seed, 200, 10),
        prox_conditioning(seed, 200),
        forced_acceptance_equivalence(seed, 200),
        optimistic_rescaling(seed, 500),
    ]
}
