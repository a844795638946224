//! Acceptance criteria, one line each. Run with
//! `cargo test -p logband --test acceptance`; exits nonzero if any fails.
//!
//! Reference values are recomputed here from first principles (dense
//! factorizations, quadrature, brute-force search over the boundary) rather
//! than taken from the library.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use logband::cost;
use logband::experiment::{metadata, simulate, ExperimentConfig};
use logband::learners::warmup::theoretical_tau;
use logband::learners::{ada_step, ecolog_step, ofu_select, AdaOutcome, AdaState, EcologState};
use logband::solvers::{solve_prox_iterations, LossTerm};
use logband::{
    alpha_coeffs, dsigmoid, kappa_of, logloss, make_environment, norm_for_kappa, pgd_iterations,
    solve_prox, warmup_run, AlgorithmId, ArmGeometry, ArmSetKind, ConstraintSet, Ellipsoid,
    EnvSpec, ProblemParams, ProxProblem, RadiusSchedule, SpdMatrix, ThetaSpec, TrajectoryLog,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_ball_point(r: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| r.random_range(-1.0..1.0));
        if v.norm() <= 1.0 {
            return v;
        }
    }
}

fn random_spd(r: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    // Random rotation (QR of a Gaussian-ish matrix) times a spread spectrum.
    let g = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
    let q = g.qr().q();
    let eig = DVector::from_fn(d, |_, _| lo * (hi / lo).powf(r.random_range(0.0..1.0)));
    &q * DMatrix::from_diagonal(&eig) * q.transpose()
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

// ---------------------------------------------------------------------------
// 1. Ellipsoid projection against a brute-force boundary search.

/// Nearest point to `x` on `{c + √r L⁻ᵀ u : ‖u‖ = 1}` by zooming grids over
/// polar angles.
fn boundary_oracle(x: &DVector<f64>, c: &DVector<f64>, a: &DMatrix<f64>, r: f64) -> DVector<f64> {
    let d = x.len();
    let l = a.clone().cholesky().expect("spd").l();
    let lt_inv = l.transpose().try_inverse().expect("invertible");
    let point = |angles: &[f64]| -> DVector<f64> {
        let u = if d == 2 {
            DVector::from_row_slice(&[angles[0].cos(), angles[0].sin()])
        } else {
            let (phi, psi) = (angles[0], angles[1]);
            DVector::from_row_slice(&[psi.sin() * phi.cos(), psi.sin() * phi.sin(), psi.cos()])
        };
        c + &lt_inv * u * r.sqrt()
    };
    let dist = |angles: &[f64]| (point(angles) - x).norm_squared();

    let (mut centre, mut half, n) = if d == 2 {
        (vec![PI], vec![PI], 4001)
    } else {
        (vec![PI, PI / 2.0], vec![PI, PI / 2.0], 401)
    };
    let mut best = centre.clone();
    for level in 0..14 {
        let pts = if level == 0 { n } else { 31 };
        let axis =
            |k: usize, i: usize| centre[k] - half[k] + 2.0 * half[k] * i as f64 / (pts - 1) as f64;
        let mut best_val = f64::INFINITY;
        if d == 2 {
            for i in 0..pts {
                let ang = [axis(0, i)];
                let v = dist(&ang);
                if v < best_val {
                    best_val = v;
                    best = ang.to_vec();
                }
            }
        } else {
            for i in 0..pts {
                for j in 0..pts {
                    let ang = [axis(0, i), axis(1, j)];
                    let v = dist(&ang);
                    if v < best_val {
                        best_val = v;
                        best = ang.to_vec();
                    }
                }
            }
        }
        let step: Vec<f64> = half.iter().map(|h| 2.0 * h / (pts - 1) as f64).collect();
        centre = best.clone();
        half = step.iter().map(|s| 3.0 * s).collect();
    }
    point(&best)
}

fn criterion_projection() -> Verdict {
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    let mut outside = 0;
    for k in 0..100 {
        let d = 2 + k % 2;
        let a = random_spd(&mut r, d, 0.2, 5.0);
        let c = DVector::from_fn(d, |_, _| r.random_range(-2.0..2.0));
        let rad: f64 = r.random_range(0.5..4.0);
        // Every tenth point is taken well inside (offset ≤ 0.08·√r/√λ_max).
        let spread = if k % 10 == 0 {
            0.05 * rad.sqrt() / 5f64.sqrt()
        } else {
            6.0
        };
        let x = &c + DVector::from_fn(d, |_, _| r.random_range(-spread..spread));
        let e = Ellipsoid::new(
            c.clone(),
            SpdMatrix::from_matrix(a.clone()).expect("spd"),
            rad,
        )
        .expect("valid");
        let got = e.project(&x).expect("projection");
        let level = (&x - &c).dot(&(&a * (&x - &c)));
        let want = if level <= rad {
            x.clone()
        } else {
            outside += 1;
            boundary_oracle(&x, &c, &a, rad)
        };
        let err = (&got - &want).norm();
        worst = worst.max(err);
        bad += usize::from(err > 1e-6);
    }
    Verdict::new(
        bad == 0,
        format!("{bad}/100 off by >1e-6, worst {worst:.1e}, {outside} exterior points"),
    )
}

// ---------------------------------------------------------------------------
// 2. Incremental factorization against from-scratch recomputation.

fn criterion_factorization() -> Verdict {
    let mut r = rng(202);
    let d = 10;
    let start = random_spd(&mut r, d, 0.5, 3.0);
    let mut m = SpdMatrix::from_matrix(start.clone()).expect("spd");
    let mut dense = start;
    cost::reset();
    for _ in 0..500 {
        let v = unit_ball_point(&mut r, d) * r.random_range(0.1..3.0);
        let w: f64 = r.random_range(0.0..2.0);
        m.rank1_update(&v, w).expect("update");
        dense.ger(w, &v, &v, 1.0);
    }
    let ops = cost::take();
    let chol = dense.clone().cholesky().expect("spd");
    let errs = [
        rel_err(m.matrix(), &dense),
        rel_err(m.cholesky_factor(), &chol.l()),
        rel_err(m.inverse(), &chol.inverse()),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let quadratic = ops == 500 * (d * d) as u64;
    Verdict::new(
        worst <= 1e-8 && quadratic,
        format!(
            "rel err M {:.1e}, L {:.1e}, M^-1 {:.1e}; {} op units (no refactorization: {quadratic})",
            errs[0], errs[1], errs[2], ops
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. Proximal solver with the closed-form iteration budget.

fn euclidean_diameter(set: &ConstraintSet) -> f64 {
    let ellipsoid = |e: &Ellipsoid| {
        let widest = e
            .shape()
            .inverse()
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .max();
        2.0 * (e.radius_sq() * widest).sqrt()
    };
    match set {
        ConstraintSet::Ball { radius, .. } => 2.0 * radius,
        ConstraintSet::Ellipsoid(e) => ellipsoid(e),
        ConstraintSet::Intersection(e, radius) => ellipsoid(e).min(2.0 * radius),
    }
}

fn criterion_prox() -> Verdict {
    let mut r = rng(303);
    let mut bad = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut max_iters = 0;
    for k in 0..200 {
        let d = 1 + k % 10;
        let s: f64 = r.random_range(0.5..6.0);
        // A history-like metric: I + Σ μ̇ a aᵀ.
        let mut w = SpdMatrix::scaled_identity(d, 1.0).expect("spd");
        for _ in 0..r.random_range(0..200) {
            w.rank1_update(&unit_ball_point(&mut r, d), r.random_range(0.0..0.25))
                .expect("update");
        }
        let set = match k % 3 {
            0 => ConstraintSet::ball(d, s).expect("ball"),
            _ => {
                let shape = SpdMatrix::from_matrix(random_spd(&mut r, d, 0.5, 20.0)).expect("spd");
                let centre = unit_ball_point(&mut r, d) * (s / 2.0);
                let e =
                    Ellipsoid::new(centre, shape, r.random_range(0.5..10.0)).expect("ellipsoid");
                if k % 3 == 1 {
                    ConstraintSet::Ellipsoid(e)
                } else {
                    ConstraintSet::intersection(e, s).expect("intersection")
                }
            }
        };
        let anchor = set
            .project(&(unit_ball_point(&mut r, d) * s))
            .expect("projection");
        let diam = euclidean_diameter(&set);
        let dbound = set
            .diam_under_arms(ArmGeometry::UnitBall)
            .expect("diameter");
        let terms: Vec<LossTerm> = vec![(unit_ball_point(&mut r, d), r.random_range(0..=1u8))];
        let t: usize = r.random_range(1..5000);
        let eps = 1.0 / t as f64;
        let p = ProxProblem {
            metric: &w,
            anchor: &anchor,
            eta: 1.0 / (2.0 + dbound),
            terms: &terms,
            constraint: &set,
            eps,
        };
        let n = pgd_iterations(dbound, diam, eps);
        let sol = solve_prox_iterations(&p, n).expect("solve");
        let reference = solve_prox_iterations(&p, 10 * n).expect("reference");
        let certified = solve_prox(&p).expect("solve");
        max_iters = max_iters.max(n);
        let err = (&sol.theta - &reference.theta)
            .norm()
            .max((&certified.theta - &reference.theta).norm());
        worst_ratio = worst_ratio.max(err / eps);
        let feasible = set.contains_within(&sol.theta, 1e-8).expect("membership");
        bad += usize::from(err > eps || !feasible);
    }
    Verdict::new(
        bad == 0,
        format!("{bad}/200 outside eps of the 10x reference, worst err/eps {worst_ratio:.2e}, max budget {max_iters}"),
    )
}

// ---------------------------------------------------------------------------
// 4. Self-concordance and local quadratic lower bound.

fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn mu_dot(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

fn log_loss(z: f64, r: u8) -> f64 {
    // ln(1 + e^z) − r z, evaluated without overflow.
    z.max(0.0) + (-z.abs()).exp().ln_1p() - f64::from(r) * z
}

fn criterion_self_concordance() -> Verdict {
    let mut r = rng(404);
    let n = 10_000;
    let mut sc_bad = 0;
    let mut quad_bad = 0;
    let mut worst_quad: f64 = 0.0;
    for _ in 0..n {
        let x: f64 = r.random_range(-15.0..15.0);
        let y = x + r.random_range(-10.0..10.0);
        let gap = (x - y).abs();
        let (a, at) = alpha_coeffs(x, y);
        let a_ref = simpson(|v| mu_dot(x + v * (y - x)), 4096);
        let at_ref = simpson(|v| (1.0 - v) * mu_dot(x + v * (y - x)), 4096);
        let agree = (a - a_ref).abs() <= 1e-9 * a_ref && (at - at_ref).abs() <= 1e-9 * at_ref;
        let (mx, my) = (dsigmoid(x), dsigmoid(y));
        let lower = 1.0 - 1e-12;
        let ok = agree
            && a >= mx / (1.0 + gap) * lower
            && a >= my / (1.0 + gap) * lower
            && at >= mx / (2.0 + gap) * lower
            && mx <= my * gap.exp() * (1.0 + 1e-12);
        sc_bad += usize::from(!ok);
    }
    for _ in 0..n {
        let d = r.random_range(1..6);
        let s: f64 = r.random_range(0.5..6.0);
        let arm = unit_ball_point(&mut r, d);
        let theta = unit_ball_point(&mut r, d) * s;
        let theta_r = unit_ball_point(&mut r, d) * s;
        let label = r.random_range(0..=1u8);
        let (z, zr) = (arm.dot(&theta), arm.dot(&theta_r));
        let diam = (z - zr).abs() * r.random_range(1.0..2.0);
        let lib = logloss(z, label).expect("label").value;
        let lhs = log_loss(z, label);
        let grad_r = 1.0 / (1.0 + (-zr).exp()) - f64::from(label);
        let rhs =
            log_loss(zr, label) + grad_r * (z - zr) + mu_dot(zr) / (2.0 + diam) * (z - zr).powi(2);
        worst_quad = worst_quad.max(rhs - lhs);
        let consistent = (lib - lhs).abs() <= 1e-12 * (1.0 + lhs.abs());
        quad_bad += usize::from(!consistent || lhs < rhs - 1e-12 * (1.0 + lhs.abs()));
    }
    Verdict::new(
        sc_bad == 0 && quad_bad == 0,
        format!("self-concordance {sc_bad}/{n}, local quadratic {quad_bad}/{n} violations (max rhs-lhs {worst_quad:.1e})"),
    )
}

// ---------------------------------------------------------------------------
// Independent schedule formulas (natural log).

fn lambda_t(d: usize, delta: f64, t: f64) -> f64 {
    d as f64 * ((4.0 + t / 4.0) / delta).ln()
}

fn beta_t(d: usize, s: f64, delta: f64, t: f64) -> f64 {
    let gamma = (s + 1.5).powi(2) * lambda_t(d, delta, t);
    (2.5 + (s + 1.5).powi(2) + s).powi(2) * gamma
}

fn sigma_t(d: usize, s: f64, delta: f64, t: f64) -> f64 {
    let nu = 0.5 + 2.0 * (2.0 * (t / 4.0 + 1.0).sqrt() / delta).ln();
    let df = d as f64;
    8.0 * s * s
        + 6.0
        + 4.0 * t.ln()
        + 9.0 * nu
        + 18.0 * std::f64::consts::E * df * (1.0 + t / (4.0 * df)).ln()
}

fn finite_arms(env: &logband::Environment) -> Vec<DVector<f64>> {
    match env.arms() {
        ArmGeometry::Finite(a) => a.to_vec(),
        ArmGeometry::UnitBall => unreachable!("finite arm set expected"),
    }
}

// ---------------------------------------------------------------------------
// 5. Confidence coverage of OFU-ECOLog.

fn criterion_coverage() -> Verdict {
    let (d, s, delta, horizon, tau) = (2, 3.0, 0.05, 2000, 200);
    let params = ProblemParams::new(d, s, delta).expect("params");
    let mut covered_runs = 0;
    let mut misses = 0;
    let seeds = 50;
    for seed in 0..seeds {
        let spec = EnvSpec {
            dim: d,
            kind: ArmSetKind::Fixed,
            num_arms: 20,
            theta: ThetaSpec::Norm(s),
            norm_bound: s,
        };
        let mut env = make_environment(&spec, 5000 + seed, 0).expect("environment");
        let arms = finite_arms(&env);
        let star = env.theta_star().clone();
        let admissible =
            warmup_run(tau, ArmGeometry::Finite(&arms), params, |a| env.pull(a)).expect("warm-up");
        let mut state = EcologState::new(
            admissible.center().clone(),
            ConstraintSet::Ellipsoid(admissible.clone()),
            1.0,
            tau + 1,
            RadiusSchedule::new(params),
        )
        .expect("state");
        let mut radius: Option<f64> = None;
        let mut ok = true;
        for t in tau + 1..=horizon {
            let (i, _) = match radius {
                Some(rad) => ofu_select(&state.theta, &state.w, rad, &arms),
                None => ofu_select(
                    admissible.center(),
                    admissible.shape(),
                    admissible.radius_sq(),
                    &arms,
                ),
            }
            .expect("planning");
            let reward = env.pull(&arms[i]).expect("pull");
            ecolog_step(&mut state, &arms[i], reward).expect("step");
            // C_{t+1} = {‖θ − θ_{t+1}‖²_{W_{t+1}} ≤ σ_t}.
            let rad = sigma_t(d, s, delta, t as f64);
            let diff = &star - &state.theta;
            let dist = diff.dot(&(state.w.matrix() * &diff));
            if dist > rad {
                ok = false;
                misses += 1;
            }
            radius = Some(rad);
        }
        covered_runs += usize::from(ok);
    }
    let rate = covered_runs as f64 / seeds as f64;
    Verdict::new(
        rate >= 0.95,
        format!("{covered_runs}/{seeds} runs covered at every post-warm-up round ({misses} missed rounds)"),
    )
}

// ---------------------------------------------------------------------------
// 6–8. The two-dimensional comparison run.

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).expect("valid configuration")
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_ops(logs: &[&TrajectoryLog], from: usize, to: usize) -> f64 {
    mean(
        logs.iter()
            .flat_map(|l| l.rounds[from - 1..to].iter().map(|r| r.op_count as f64)),
    )
}

fn sublinear(log: &TrajectoryLog, horizon: usize) -> bool {
    let half = log.regret_at(horizon / 2);
    log.regret_at(horizon) - half < half
}

struct ComparisonRun {
    ada: Vec<TrajectoryLog>,
    glm: Vec<TrajectoryLog>,
    ons: Vec<TrajectoryLog>,
    ofu: Vec<TrajectoryLog>,
}

fn comparison_run() -> ComparisonRun {
    let cfg = config(
        r#"
        dim = 2
        num_arms = 20
        kappa = 400.0
        horizon = 4000
        n_runs = 20
        algorithms = ["ada-ofu-ecolog", "glm-ucb", "ons", "ofu-ecolog"]
        tau_override = 200
        seed = 2026
        timing = false
        "#,
    );
    let report = simulate(&cfg).expect("simulation");
    assert!(
        report.failures.is_empty(),
        "failed cells: {:?}",
        report.failures
    );
    let take = |id| report.logs_for(id).into_iter().cloned().collect::<Vec<_>>();
    ComparisonRun {
        ada: take(AlgorithmId::AdaOfuEcolog),
        glm: take(AlgorithmId::GlmUcb),
        ons: take(AlgorithmId::Ons),
        ofu: take(AlgorithmId::OfuEcolog),
    }
}

fn criterion_regret_ordering(run: &ComparisonRun) -> Verdict {
    let t = 4000;
    let ada = mean(run.ada.iter().map(|l| l.regret_at(t)));
    let glm = mean(run.glm.iter().map(|l| l.regret_at(t)));
    let ons = mean(run.ons.iter().map(|l| l.regret_at(t)));
    let sub = run.ada.iter().filter(|l| sublinear(l, t)).count();
    let pass = ada < 0.5 * glm && ada < 0.5 * ons && sub as f64 >= 0.9 * run.ada.len() as f64;
    Verdict::new(
        pass,
        format!(
            "mean regret ada {ada:.1}, glm-ucb {glm:.1}, ons {ons:.1} (need ada < {:.1}); ada sublinear on {sub}/{}",
            0.5 * glm.min(ons),
            run.ada.len()
        ),
    )
}

fn criterion_cost(run: &ComparisonRun) -> Verdict {
    let ratio = |logs: &[TrajectoryLog]| {
        let refs: Vec<&TrajectoryLog> = logs.iter().collect();
        mean_ops(&refs, 3601, 4000) / mean_ops(&refs, 361, 400)
    };
    let glm = ratio(&run.glm);
    let ofu = ratio(&run.ofu);
    let ada = ratio(&run.ada);
    Verdict::new(
        glm >= 5.0 && ofu <= 3.0,
        format!("late/early op-count ratio glm-ucb {glm:.2} (>= 5), ofu-ecolog {ofu:.2} (<= 3); ada-ofu-ecolog {ada:.2}"),
    )
}

fn criterion_adaptive(run: &ComparisonRun) -> Verdict {
    let benign_max = run
        .ada
        .iter()
        .map(|l| l.rounds.last().and_then(|r| r.h_size).unwrap_or(0))
        .max()
        .unwrap_or(0);
    let first_rejection = run
        .ada
        .iter()
        .filter_map(|l| {
            l.rounds
                .iter()
                .find(|r| r.h_size.unwrap_or(0) > 0)
                .map(|r| r.t)
        })
        .min();

    // Mis-scaled: the learner is told S = 20 for a parameter of norm ~6.
    let kappa = 400.0;
    let true_norm = norm_for_kappa(kappa).expect("norm");
    let params = ProblemParams::new(2, 20.0, 0.05).expect("params");
    let horizon = 1000;
    let mut frozen_ok = true;
    let mut rejected = 0;
    let mut worst_h = 0;
    let mut envelope = 0.0;
    for seed in 0..3 {
        let spec = EnvSpec {
            dim: 2,
            kind: ArmSetKind::Fixed,
            num_arms: 20,
            theta: ThetaSpec::Norm(true_norm),
            norm_bound: params.s,
        };
        let mut env = make_environment(&spec, 9000 + seed, 0).expect("environment");
        let arms = finite_arms(&env);
        let mut state = AdaState::new(params).expect("state");
        envelope = state.history_envelope(horizon);
        for _ in 0..horizon {
            let (i, _) = state.select(&arms).expect("planning");
            let reward = env.pull(&arms[i]).expect("pull");
            let (theta, w, l, h) = (
                state.inner.theta.clone(),
                state.inner.w.matrix().clone(),
                state.inner.w.cholesky_factor().clone(),
                state.history.len(),
            );
            if ada_step(&mut state, &arms[i], reward, ArmGeometry::Finite(&arms)).expect("step")
                == AdaOutcome::Rejected
            {
                rejected += 1;
                frozen_ok &= state.inner.theta == theta
                    && *state.inner.w.matrix() == w
                    && *state.inner.w.cholesky_factor() == l
                    && state.history.len() == h + 1;
            } else {
                frozen_ok &= state.history.len() == h;
            }
        }
        worst_h = worst_h.max(state.history.len());
    }

    // The same mis-scaled setting through the experiment pipeline, whose
    // metadata records the measured history size against the envelope.
    let cfg = config(&format!(
        "dim = 2\nnum_arms = 20\nkappa = {kappa}\nnorm_bound = 20.0\nhorizon = {horizon}\nn_runs = 3\n\
         algorithms = [\"ada-ofu-ecolog\"]\nseed = 9000\ntiming = false\n"
    ));
    let report = simulate(&cfg).expect("simulation");
    let meta = metadata(&report);
    let recorded = meta["history"]["max_size"].as_u64().unwrap_or(u64::MAX) as usize;
    let recorded_env = meta["history"]["envelope_unit_constant"]
        .as_f64()
        .unwrap_or(0.0);
    let adversarial = frozen_ok
        && rejected > 0
        && (worst_h as f64) <= envelope
        && (recorded as f64) <= recorded_env;

    Verdict::new(
        benign_max == 0 && adversarial,
        format!(
            "benign max |H_T| = {benign_max} (need 0{}); mis-scaled: {rejected} rejections, frozen state {frozen_ok}, \
             max |H_T| {worst_h} (pipeline {recorded}) vs envelope {envelope:.3e}",
            first_rejection.map(|t| format!(", first rejection at t = {t}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. Warm-up diameter with the theoretical length.

fn criterion_warmup() -> Verdict {
    // κ ≈ 4 keeps the theoretical warm-up near 10⁶ rounds.
    let (d, s, delta, horizon) = (2, 0.1, 0.05, 1000);
    let params = ProblemParams::new(d, s, delta).expect("params");
    let kappa = 1.0 / mu_dot(s);
    let tau_formula = (16.0
        * kappa
        * d as f64
        * beta_t(d, s, delta, horizon as f64)
        * (1.0 + horizon as f64).ln())
    .ceil();
    let tau = theoretical_tau(&params, horizon).expect("tau");
    let tau_ok = (tau as f64 - tau_formula).abs() <= 1.0;
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let spec = EnvSpec {
            dim: d,
            kind: ArmSetKind::Fixed,
            num_arms: 20,
            theta: ThetaSpec::Norm(s),
            norm_bound: s,
        };
        let mut env = make_environment(&spec, 700 + seed, 0).expect("environment");
        let arms = finite_arms(&env);
        let set =
            warmup_run(tau, ArmGeometry::Finite(&arms), params, |a| env.pull(a)).expect("warm-up");
        let diam = ConstraintSet::Ellipsoid(set)
            .diam_under_arms(ArmGeometry::Finite(&arms))
            .expect("diameter");
        worst = worst.max(diam);
    }
    Verdict::new(
        tau_ok && worst <= 1.0,
        format!("kappa {kappa:.3}, tau {tau} (formula {tau_formula}), max diameter {worst:.4} over 10 runs"),
    )
}

// ---------------------------------------------------------------------------
// 10. Elliptical potential and determinant-trace along random sequences.

fn criterion_potential() -> Verdict {
    let mut r = rng(1010);
    let (d, horizon) = (5, 1000);
    let mut pot_bad = 0;
    let mut det_bad = 0;
    let mut mismatch = 0;
    let mut worst: f64 = 0.0;
    let sequences = 20;
    for k in 0..sequences {
        let lambda: f64 = r.random_range(1.0..4.0);
        let x_max: f64 = if k % 2 == 0 {
            1.0
        } else {
            r.random_range(0.2..2.0)
        };
        // Odd sequences repeat a handful of directions, the harder case.
        let dirs: Vec<DVector<f64>> = (0..3).map(|_| unit_ball_point(&mut r, d)).collect();
        let mut v = SpdMatrix::scaled_identity(d, lambda).expect("spd");
        let mut dense = DMatrix::identity(d, d) * lambda;
        let mut sum = 0.0;
        for t in 1..=horizon {
            let mut x = if k % 4 == 3 {
                dirs[t % 3].clone()
            } else {
                unit_ball_point(&mut r, d)
            };
            x *= x_max / x.norm().max(1.0).max(x_max);
            let lib = v.inv_norm_sq(&x).expect("norm");
            let chol = dense.clone().cholesky().expect("spd");
            let exact = x.dot(&chol.solve(&x));
            mismatch += usize::from((lib - exact).abs() > 1e-10 * exact.max(1e-12));
            sum += exact;
            v.rank1_update(&x, 1.0).expect("update");
            dense.ger(1.0, &x, &x, 1.0);
            let tf = t as f64;
            let pot = 2.0
                * d as f64
                * (1.0 + x_max * x_max)
                * (1.0 + tf * x_max * x_max / (d as f64 * lambda)).ln();
            worst = worst.max(sum / pot);
            pot_bad += usize::from(sum > pot);
            let log_det = dense
                .clone()
                .cholesky()
                .expect("spd")
                .l()
                .diagonal()
                .map(|v| v.ln())
                .sum()
                * 2.0;
            let det_bound = d as f64 * (lambda + tf * x_max * x_max / d as f64).ln();
            det_bad += usize::from(log_det > det_bound + 1e-12 * det_bound.abs());
            mismatch += usize::from((v.log_det() - log_det).abs() > 1e-9 * log_det.abs().max(1.0));
        }
    }
    let n = sequences * horizon;
    Verdict::new(
        pot_bad == 0 && det_bad == 0 && mismatch == 0,
        format!(
            "potential {pot_bad}/{n}, determinant-trace {det_bad}/{n} violations, {mismatch} library mismatches, max sum/bound {worst:.3}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 11. Thompson sampling on the unit ball.

fn criterion_thompson() -> Verdict {
    let cfg = config(
        r#"
        dim = 5
        arm_set = "unit-ball"
        kappa = 400.0
        horizon = 4000
        n_runs = 20
        algorithms = ["ts-ecolog", "ons"]
        tau_override = 200
        seed = 4242
        timing = false
        "#,
    );
    let report = simulate(&cfg).expect("simulation");
    if !report.failures.is_empty() {
        return Verdict::new(false, format!("failed cells: {:?}", report.failures));
    }
    let ts = report.logs_for(AlgorithmId::TsEcolog);
    let ons = report.logs_for(AlgorithmId::Ons);
    let at = |logs: &[&TrajectoryLog], t| mean(logs.iter().map(|l| l.regret_at(t)));
    let (half, full) = (at(&ts, 2000), at(&ts, 4000));
    let ons_full = at(&ons, 4000);
    let pass = full - half < half && full < ons_full;
    Verdict::new(
        pass,
        format!("ts-ecolog mean regret {half:.1} at T/2, {full:.1} at T (second-half increment {:.1}); ons {ons_full:.1}", full - half),
    )
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let kappa_check =
        (kappa_of(norm_for_kappa(400.0).expect("norm")).expect("kappa") - 400.0).abs() < 1e-6;
    assert!(kappa_check, "κ round trip");
    let started = Instant::now();
    let mut failures = 0;
    let mut report =
        |id: usize, name: &str, limit: Option<Duration>, run: &mut dyn FnMut() -> Verdict| {
            let t0 = Instant::now();
            let v = run();
            let elapsed = t0.elapsed();
            let in_time = limit.map_or(true, |l| elapsed <= l);
            let pass = v.pass && in_time;
            failures += usize::from(!pass);
            let budget = limit
                .map(|l| format!(" / {}s", l.as_secs()))
                .unwrap_or_default();
            println!(
                "{} {id:>2} {name}: {} [{:.2}s{budget}]",
                if pass { "PASS" } else { "FAIL" },
                v.detail,
                elapsed.as_secs_f64()
            );
        };
    let secs = |s| Some(Duration::from_secs(s));
    report(
        1,
        "ellipsoid projection vs boundary search",
        secs(10),
        &mut criterion_projection,
    );
    report(
        2,
        "incremental factorization",
        secs(5),
        &mut criterion_factorization,
    );
    report(
        3,
        "proximal solver iteration budget",
        secs(30),
        &mut criterion_prox,
    );
    report(
        4,
        "self-concordance and local quadratic bound",
        secs(5),
        &mut criterion_self_concordance,
    );
    report(5, "confidence coverage", secs(180), &mut criterion_coverage);
    let t0 = Instant::now();
    let run = comparison_run();
    let shared = t0.elapsed();
    let timed = |f: fn(&ComparisonRun) -> Verdict| {
        let v = f(&run);
        Verdict::new(
            v.pass && shared <= Duration::from_secs(600),
            format!(
                "{} (shared run {:.1}s / 600s)",
                v.detail,
                shared.as_secs_f64()
            ),
        )
    };
    report(6, "regret ordering and shape", None, &mut || {
        timed(criterion_regret_ordering)
    });
    report(7, "per-round cost growth", None, &mut || {
        timed(criterion_cost)
    });
    report(8, "adaptive mechanism", None, &mut || {
        criterion_adaptive(&run)
    });
    report(9, "warm-up diameter", secs(120), &mut criterion_warmup);
    report(
        10,
        "elliptical potential and determinant-trace",
        secs(5),
        &mut criterion_potential,
    );
    report(
        11,
        "thompson sampling on the unit ball",
        None,
        &mut criterion_thompson,
    );
    println!(
        "{} failed, total {:.1}s",
        failures,
        started.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
