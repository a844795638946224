//! Complete bandit algorithms behind one interface.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ArmGeometry, ConstraintSet, Ellipsoid};
use crate::logistic::ProblemParams;
use crate::schedule::{RadiusSchedule, ScheduleKind};

use super::ada::{ada_step, AdaState};
use super::baselines::{GlmUcb, Ons};
use super::ecolog::{ecolog_step, EcologState, EpsRule};
use super::planning::{ofu_select, ts_select, ArmChoice};
use super::warmup::WarmUp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmId {
    OfuEcolog,
    TsEcolog,
    AdaOfuEcolog,
    GlmUcb,
    Ons,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 5] = [
        AlgorithmId::OfuEcolog,
        AlgorithmId::TsEcolog,
        AlgorithmId::AdaOfuEcolog,
        AlgorithmId::GlmUcb,
        AlgorithmId::Ons,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmId::OfuEcolog => "ofu-ecolog",
            AlgorithmId::TsEcolog => "ts-ecolog",
            AlgorithmId::AdaOfuEcolog => "ada-ofu-ecolog",
            AlgorithmId::GlmUcb => "glm-ucb",
            AlgorithmId::Ons => "ons",
        }
    }

    pub fn uses_warmup(&self) -> bool {
        matches!(self, AlgorithmId::OfuEcolog | AlgorithmId::TsEcolog)
    }

    /// Whether the algorithm can act on the unit ball.
    pub fn supports_unit_ball(&self) -> bool {
        !matches!(self, AlgorithmId::OfuEcolog | AlgorithmId::AdaOfuEcolog)
    }

    /// Radius kind of the planning confidence set, when there is one.
    pub fn planning_radius(&self) -> Option<ScheduleKind> {
        match self {
            AlgorithmId::OfuEcolog | AlgorithmId::TsEcolog => Some(ScheduleKind::Sigma),
            AlgorithmId::AdaOfuEcolog => Some(ScheduleKind::Eta),
            AlgorithmId::GlmUcb | AlgorithmId::Ons => None,
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::config("algorithms", format!("unknown algorithm id `{s}`")))
    }
}

/// A bandit algorithm driven round by round.
pub trait Learner: Send {
    fn id(&self) -> AlgorithmId;

    fn select(&mut self, arms: ArmGeometry<'_>, rng: &mut ChaCha8Rng) -> Result<ArmChoice>;

    fn observe(&mut self, arm: &DVector<f64>, reward: u8, arms: ArmGeometry<'_>) -> Result<()>;

    /// Size of the rejected-pair history, for algorithms that keep one.
    fn history_size(&self) -> Option<usize> {
        None
    }

    /// Whether `theta` lies in the current planning confidence set; `None`
    /// when no such set is defined (baselines, warm-up rounds).
    fn covers(&self, _theta: &DVector<f64>) -> Result<Option<bool>> {
        Ok(None)
    }

    /// Current point estimate.
    fn estimate(&self) -> DVector<f64>;
}

/// Everything needed to instantiate any algorithm.
#[derive(Debug, Clone, Copy)]
pub struct LearnerSetup {
    pub params: ProblemParams,
    pub horizon: usize,
    /// Warm-up length for the warm-up based algorithms.
    pub tau: usize,
    pub eps_rule: EpsRule,
    pub unit_ball: bool,
}

pub fn build_learner(id: AlgorithmId, setup: &LearnerSetup) -> Result<Box<dyn Learner>> {
    if setup.unit_ball && !id.supports_unit_ball() {
        return Err(Error::config(
            "algorithms",
            format!("`{id}` enumerates arms and cannot run on the unit ball"),
        ));
    }
    Ok(match id {
        AlgorithmId::OfuEcolog | AlgorithmId::TsEcolog => Box::new(WarmStarted::new(id, setup)?),
        AlgorithmId::AdaOfuEcolog => {
            let mut state = AdaState::new(setup.params)?;
            state.inner.eps_rule = setup.eps_rule;
            Box::new(Adaptive { state })
        }
        AlgorithmId::GlmUcb => Box::new(Baseline::Glm(GlmUcb::new(setup.params, setup.horizon)?)),
        AlgorithmId::Ons => Box::new(Baseline::Ons(Ons::new(setup.params, setup.horizon)?)),
    })
}

enum Phase {
    WarmUp(WarmUp),
    Main {
        state: EcologState,
        /// Set returned by the warm-up; the first planning set.
        admissible: Ellipsoid,
        /// `None` until the first learning step.
        plan_radius: Option<f64>,
    },
}

/// OFU-ECOLog and TS-ECOLog.
struct WarmStarted {
    id: AlgorithmId,
    schedule: RadiusSchedule,
    eps_rule: EpsRule,
    phase: Phase,
}

impl WarmStarted {
    fn new(id: AlgorithmId, setup: &LearnerSetup) -> Result<Self> {
        Ok(Self {
            id,
            schedule: RadiusSchedule::new(setup.params),
            eps_rule: setup.eps_rule,
            phase: Phase::WarmUp(WarmUp::new(setup.params, setup.tau.max(1))?),
        })
    }
}

impl Learner for WarmStarted {
    fn id(&self) -> AlgorithmId {
        self.id
    }

    fn select(&mut self, arms: ArmGeometry<'_>, rng: &mut ChaCha8Rng) -> Result<ArmChoice> {
        match &self.phase {
            Phase::WarmUp(w) => w.select(arms),
            Phase::Main {
                state,
                admissible,
                plan_radius,
            } => match self.id {
                AlgorithmId::OfuEcolog => {
                    let ArmGeometry::Finite(list) = arms else {
                        return Err(Error::param(
                            "arms",
                            "optimistic planning needs a finite arm set",
                        ));
                    };
                    let (i, _) = match plan_radius {
                        Some(r) => ofu_select(&state.theta, &state.w, *r, list)?,
                        None => ofu_select(
                            admissible.center(),
                            admissible.shape(),
                            admissible.radius_sq(),
                            list,
                        )?,
                    };
                    Ok(ArmChoice::Index(i))
                }
                _ => {
                    let radius = self.schedule.sigma(state.t);
                    Ok(ts_select(
                        &state.theta,
                        &state.w,
                        radius,
                        Some(&state.constraint),
                        arms,
                        rng,
                    )?
                    .0)
                }
            },
        }
    }

    fn observe(&mut self, arm: &DVector<f64>, reward: u8, _arms: ArmGeometry<'_>) -> Result<()> {
        match &mut self.phase {
            Phase::WarmUp(w) => {
                w.observe(arm, reward)?;
                if w.is_done() {
                    let tau = w.tau();
                    let Phase::WarmUp(w) = std::mem::replace(
                        &mut self.phase,
                        Phase::WarmUp(WarmUp::new(self.schedule.params, 1)?),
                    ) else {
                        unreachable!("phase checked above");
                    };
                    let admissible = w.finish()?;
                    let mut state = EcologState::new(
                        admissible.center().clone(),
                        ConstraintSet::Ellipsoid(admissible.clone()),
                        1.0,
                        tau + 1,
                        self.schedule,
                    )?;
                    state.eps_rule = self.eps_rule;
                    self.phase = Phase::Main {
                        state,
                        admissible,
                        plan_radius: None,
                    };
                }
                Ok(())
            }
            Phase::Main {
                state, plan_radius, ..
            } => {
                let t = state.t;
                ecolog_step(state, arm, reward)?;
                *plan_radius = Some(self.schedule.sigma(t));
                Ok(())
            }
        }
    }

    fn covers(&self, theta: &DVector<f64>) -> Result<Option<bool>> {
        match &self.phase {
            Phase::WarmUp(_) => Ok(None),
            Phase::Main {
                state,
                admissible,
                plan_radius,
            } => {
                let radius = match (self.id, plan_radius) {
                    (AlgorithmId::TsEcolog, _) => self.schedule.sigma(state.t),
                    (_, Some(r)) => *r,
                    (_, None) => return Ok(Some(admissible.contains(theta)?)),
                };
                Ok(Some(state.distance_sq(theta)? <= radius))
            }
        }
    }

    fn estimate(&self) -> DVector<f64> {
        match &self.phase {
            Phase::WarmUp(w) => DVector::zeros(w.design().dim()),
            Phase::Main { state, .. } => state.theta.clone(),
        }
    }
}

struct Adaptive {
    state: AdaState,
}

impl Learner for Adaptive {
    fn id(&self) -> AlgorithmId {
        AlgorithmId::AdaOfuEcolog
    }

    fn select(&mut self, arms: ArmGeometry<'_>, _rng: &mut ChaCha8Rng) -> Result<ArmChoice> {
        let ArmGeometry::Finite(list) = arms else {
            return Err(Error::param(
                "arms",
                "optimistic planning needs a finite arm set",
            ));
        };
        Ok(ArmChoice::Index(self.state.select(list)?.0))
    }

    fn observe(&mut self, arm: &DVector<f64>, reward: u8, arms: ArmGeometry<'_>) -> Result<()> {
        ada_step(&mut self.state, arm, reward, arms).map(|_| ())
    }

    fn history_size(&self) -> Option<usize> {
        Some(self.state.history.len())
    }

    fn covers(&self, theta: &DVector<f64>) -> Result<Option<bool>> {
        self.state.plan_contains(theta).map(Some)
    }

    fn estimate(&self) -> DVector<f64> {
        self.state.inner.theta.clone()
    }
}

enum Baseline {
    Glm(GlmUcb),
    Ons(Ons),
}

impl Learner for Baseline {
    fn id(&self) -> AlgorithmId {
        match self {
            Baseline::Glm(_) => AlgorithmId::GlmUcb,
            Baseline::Ons(_) => AlgorithmId::Ons,
        }
    }

    fn select(&mut self, arms: ArmGeometry<'_>, rng: &mut ChaCha8Rng) -> Result<ArmChoice> {
        match self {
            Baseline::Glm(b) => b.select(arms, rng),
            Baseline::Ons(b) => b.select(arms, rng),
        }
    }

    fn observe(&mut self, arm: &DVector<f64>, reward: u8, _arms: ArmGeometry<'_>) -> Result<()> {
        match self {
            Baseline::Glm(b) => b.observe(arm, reward),
            Baseline::Ons(b) => b.observe(arm, reward),
        }
    }

    fn estimate(&self) -> DVector<f64> {
        match self {
            Baseline::Glm(b) => b.theta().clone(),
            Baseline::Ons(b) => b.theta().clone(),
        }
    }
}
