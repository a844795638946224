//! Aggregation across runs and design-matrix diagnostics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::logistic::dsigmoid;

use super::runner::TrajectoryLog;

/// Pointwise statistics of cumulative regret.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub mean: Vec<f64>,
    /// Sample standard deviation (zero for a single run).
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub op_count_mean: Vec<f64>,
}

pub fn aggregate(logs: &[&TrajectoryLog]) -> Result<Aggregate> {
    let Some(first) = logs.first() else {
        return Err(Error::param("logs", "nothing to aggregate"));
    };
    let len = first.len();
    if let Some(bad) = logs.iter().find(|l| l.len() != len) {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: bad.len(),
        });
    }
    let n = logs.len() as f64;
    let mut out = Aggregate {
        runs: logs.len(),
        mean: vec![0.0; len],
        std: vec![0.0; len],
        min: vec![f64::INFINITY; len],
        max: vec![f64::NEG_INFINITY; len],
        op_count_mean: vec![0.0; len],
    };
    for i in 0..len {
        let mut sum = 0.0;
        let mut ops = 0.0;
        for l in logs {
            let v = l.rounds[i].regret_cum;
            sum += v;
            ops += l.rounds[i].op_count as f64;
            out.min[i] = out.min[i].min(v);
            out.max[i] = out.max[i].max(v);
        }
        let mean = sum / n;
        out.mean[i] = mean;
        out.op_count_mean[i] = ops / n;
        if logs.len() > 1 {
            let ss: f64 = logs
                .iter()
                .map(|l| (l.rounds[i].regret_cum - mean).powi(2))
                .sum();
            out.std[i] = (ss / (n - 1.0)).sqrt();
        }
    }
    Ok(out)
}

/// `H(θ) = Σ μ̇(aᵀθ) aaᵀ + λI` and `V = Σ aaᵀ/κ + λI` over the played arms.
pub fn design_diagnostics(
    arms: &[DVector<f64>],
    theta: &DVector<f64>,
    lambda: f64,
    kappa: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = theta.len();
    let mut h = DMatrix::identity(d, d) * lambda;
    let mut v = h.clone();
    for a in arms {
        h.ger(dsigmoid(a.dot(theta)), a, a, 1.0);
        v.ger(1.0 / kappa, a, a, 1.0);
    }
    (h, v)
}
