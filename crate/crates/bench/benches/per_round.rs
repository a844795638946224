use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use logband::learners::GlmUcb;
use logband::nalgebra::DVector;
use logband::{
    ecolog_step, ofu_select, sigmoid, solve_prox, ArmGeometry, ConstraintSet, EcologState,
    ProblemParams, ProxProblem, RadiusSchedule, SpdMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| rng.random_range(-1.0f64..1.0));
    let n = v.norm().max(1e-12);
    v / n
}

fn arms(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<DVector<f64>> {
    (0..k).map(|_| unit_vec(rng, d)).collect()
}

fn label(rng: &mut ChaCha8Rng, p: f64) -> u8 {
    u8::from(rng.random::<f64>() < p)
}

fn bench_rank1(c: &mut Criterion) {
    let mut group = c.benchmark_group("rank1_update");
    for d in [2usize, 10, 50] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = unit_vec(&mut rng, d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            let base = SpdMatrix::scaled_identity(d, 1.0).unwrap();
            b.iter_batched(
                || base.clone(),
                |mut m| {
                    m.rank1_update(black_box(&v), 0.2).unwrap();
                    m
                },
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn bench_prox(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_prox");
    for d in [2usize, 10] {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut w = SpdMatrix::scaled_identity(d, 1.0).unwrap();
        for _ in 0..200 {
            w.rank1_update(&unit_vec(&mut rng, d), 0.1).unwrap();
        }
        let anchor = unit_vec(&mut rng, d) * 0.5;
        let terms = vec![(unit_vec(&mut rng, d), 1u8)];
        let constraint = ConstraintSet::ball(d, 3.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| {
                solve_prox(black_box(&ProxProblem {
                    metric: &w,
                    anchor: &anchor,
                    eta: 1.0 / 3.0,
                    terms: &terms,
                    constraint: &constraint,
                    eps: 1e-3,
                }))
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_ofu(c: &mut Criterion) {
    let mut group = c.benchmark_group("ofu_select");
    for k in [20usize, 200] {
        let d = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = arms(&mut rng, d, k);
        let theta = unit_vec(&mut rng, d);
        let mut w = SpdMatrix::scaled_identity(d, 1.0).unwrap();
        for a in &set {
            w.rank1_update(a, 0.1).unwrap();
        }
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| ofu_select(black_box(&theta), &w, 40.0, &set).unwrap())
        });
    }
    group.finish();
}

fn bench_ecolog(c: &mut Criterion) {
    let d = 5;
    let params = ProblemParams::new(d, 3.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let set = arms(&mut rng, d, 20);
    let theta_star = unit_vec(&mut rng, d) * 2.0;
    let constraint = ConstraintSet::ball(d, 3.0).unwrap();
    let diameter = constraint
        .diam_under_arms(ArmGeometry::Finite(&set))
        .unwrap();
    let mut state = EcologState::new(
        DVector::zeros(d),
        constraint,
        diameter,
        1,
        RadiusSchedule::new(params),
    )
    .unwrap();
    for t in 0..500 {
        let a = &set[t % set.len()];
        let r = label(&mut rng, sigmoid(a.dot(&theta_star)));
        ecolog_step(&mut state, a, r).unwrap();
    }
    let arm = set[0].clone();
    c.bench_function("ecolog_step", |b| {
        b.iter_batched(
            || state.clone(),
            |mut s| {
                ecolog_step(&mut s, black_box(&arm), 1).unwrap();
                s
            },
            BatchSize::SmallInput,
        )
    });
}

/// One GLM-UCB round (select, then refit on the full history) after `t`
/// observations; cost should grow roughly linearly with `t`.
fn bench_glm_round(c: &mut Criterion) {
    let mut group = c.benchmark_group("glm_ucb_round");
    group.sample_size(10);
    let d = 2;
    let params = ProblemParams::new(d, 3.0, 0.05).unwrap();
    for t in [400usize, 4000] {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let set = arms(&mut rng, d, 20);
        let theta_star = unit_vec(&mut rng, d) * 3.0;
        let mut glm = GlmUcb::new(params, 5000).unwrap();
        for i in 0..t {
            let a = &set[i % set.len()];
            let r = label(&mut rng, sigmoid(a.dot(&theta_star)));
            glm.observe(a, r).unwrap();
        }
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, _| {
            b.iter_batched(
                || (glm.clone(), ChaCha8Rng::seed_from_u64(6)),
                |(mut g, mut r)| {
                    let choice = g.select(ArmGeometry::Finite(&set), &mut r).unwrap();
                    let a = choice.resolve(ArmGeometry::Finite(&set)).unwrap();
                    g.observe(&a, 1).unwrap();
                    g
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_rank1,
    bench_prox,
    bench_ofu,
    bench_ecolog,
    bench_glm_round
);
criterion_main!(benches);
