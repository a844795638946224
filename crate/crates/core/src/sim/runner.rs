//! Episode loop with regret accounting and per-round cost instrumentation.

use std::time::Instant;

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;

use crate::cost;
use crate::error::{Error, Result};
use crate::learners::{AlgorithmId, Learner};

use super::env::Environment;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// Round index, starting at 1.
    pub t: usize,
    pub arm: DVector<f64>,
    pub reward: u8,
    pub regret: f64,
    pub regret_cum: f64,
    /// Learner time for the round (selection plus update).
    pub elapsed_ns: u64,
    /// Abstract operation count for the round.
    pub op_count: u64,
    pub h_size: Option<usize>,
    /// Whether the parameter was in the planning confidence set.
    pub coverage: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub algorithm: AlgorithmId,
    pub run_id: u64,
    pub theta_star: DVector<f64>,
    pub rounds: Vec<RoundRecord>,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.regret_cum)
    }

    pub fn regret_at(&self, t: usize) -> f64 {
        if t == 0 {
            return 0.0;
        }
        self.rounds[t - 1].regret_cum
    }

    pub fn arms(&self) -> Vec<DVector<f64>> {
        self.rounds.iter().map(|r| r.arm.clone()).collect()
    }
}

/// Runs `horizon` rounds. Environment sampling (arm sets, rewards) is
/// excluded from the timing and operation counts.
pub fn run_episode(
    learner: &mut dyn Learner,
    env: &mut Environment,
    horizon: usize,
    run_id: u64,
    rng: &mut ChaCha8Rng,
) -> Result<TrajectoryLog> {
    if horizon < 1 {
        return Err(Error::param("horizon", "must be at least 1"));
    }
    let theta_star = env.theta_star().clone();
    let mut rounds = Vec::with_capacity(horizon);
    let mut cum = 0.0;
    for t in 1..=horizon {
        env.begin_round();
        let coverage = learner.covers(&theta_star)?;

        cost::reset();
        let start = Instant::now();
        let choice = learner.select(env.arms(), rng)?;
        let mut elapsed = start.elapsed();
        let mut ops = cost::take();

        let arm = env.resolve(&choice)?;
        let reward = env.pull(&arm)?;

        let start = Instant::now();
        learner.observe(&arm, reward, env.arms())?;
        elapsed += start.elapsed();
        ops += cost::take();

        let regret = (env.best_mean() - env.mean(&arm)).max(0.0);
        cum += regret;
        rounds.push(RoundRecord {
            t,
            arm,
            reward,
            regret,
            regret_cum: cum,
            elapsed_ns: u64::try_from(elapsed.as_nanos()).unwrap_or(u64::MAX),
            op_count: ops,
            h_size: learner.history_size(),
            coverage,
        });
    }
    Ok(TrajectoryLog {
        algorithm: learner.id(),
        run_id,
        theta_star,
        rounds,
    })
}
