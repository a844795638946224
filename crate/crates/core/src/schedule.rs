//! Slowly growing confidence radii, all evaluated with the natural logarithm.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logistic::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Lambda,
    Gamma,
    Beta,
    Nu,
    Sigma,
    Eta,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 6] = [
        ScheduleKind::Lambda,
        ScheduleKind::Gamma,
        ScheduleKind::Beta,
        ScheduleKind::Nu,
        ScheduleKind::Sigma,
        ScheduleKind::Eta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleKind::Lambda => "lambda",
            ScheduleKind::Gamma => "gamma",
            ScheduleKind::Beta => "beta",
            ScheduleKind::Nu => "nu",
            ScheduleKind::Sigma => "sigma",
            ScheduleKind::Eta => "eta",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScheduleKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::param("schedule", format!("unknown schedule kind `{s}`")))
    }
}

/// Radius schedules bound to a set of problem constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSchedule {
    pub params: ProblemParams,
}

impl RadiusSchedule {
    pub fn new(params: ProblemParams) -> Self {
        Self { params }
    }

    pub fn eval(&self, kind: ScheduleKind, t: usize) -> Result<f64> {
        if t < 1 {
            return Err(Error::InvalidRound(t));
        }
        let t = t as f64;
        Ok(match kind {
            ScheduleKind::Lambda => self.lambda_at(t),
            ScheduleKind::Gamma => self.gamma_at(t),
            ScheduleKind::Beta => self.beta_at(t),
            ScheduleKind::Nu => self.nu_at(t),
            ScheduleKind::Sigma => self.sigma_at(t),
            ScheduleKind::Eta => self.eta_at(t),
        })
    }

    pub fn lambda(&self, t: usize) -> f64 {
        self.lambda_at(t.max(1) as f64)
    }

    pub fn gamma(&self, t: usize) -> f64 {
        self.gamma_at(t.max(1) as f64)
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta_at(t.max(1) as f64)
    }

    pub fn nu(&self, t: usize) -> f64 {
        self.nu_at(t.max(1) as f64)
    }

    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma_at(t.max(1) as f64)
    }

    pub fn eta(&self, t: usize) -> f64 {
        self.eta_at(t.max(1) as f64)
    }

    fn lambda_at(&self, t: f64) -> f64 {
        let p = &self.params;
        p.dim as f64 * ((4.0 + t / 4.0) / p.delta).ln()
    }

    fn gamma_at(&self, t: f64) -> f64 {
        let s = self.params.s;
        (s + 1.5).powi(2) * self.lambda_at(t)
    }

    fn beta_at(&self, t: f64) -> f64 {
        let s = self.params.s;
        (2.5 + (s + 1.5).powi(2) + s).powi(2) * self.gamma_at(t)
    }

    fn nu_at(&self, t: f64) -> f64 {
        0.5 + 2.0 * (2.0 * (t / 4.0 + 1.0).sqrt() / self.params.delta).ln()
    }

    fn sigma_at(&self, t: f64) -> f64 {
        let p = &self.params;
        let d = p.dim as f64;
        8.0 * p.s * p.s
            + 6.0
            + 4.0 * t.ln()
            + 9.0 * self.nu_at(t)
            + 18.0 * std::f64::consts::E * d * (1.0 + t / (4.0 * d)).ln()
    }

    fn eta_at(&self, t: f64) -> f64 {
        let p = &self.params;
        let d = p.dim as f64;
        4.0 + 4.0 * t.ln()
            + 16.0 * p.s * p.s
            + (2.0 + 2.0 * p.s).powi(2) * self.nu_at(t) / 2.0
            + 8.0 * (1.0 + p.s) * d * (1.0 + t / d).ln()
    }
}
