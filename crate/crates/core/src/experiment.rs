//! Configuration-driven experiments: validation, parallel execution and
//! CSV/JSON output.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{
    build_learner, theoretical_tau, AdaState, AlgorithmId, BaselineConstants, EpsRule, LearnerSetup,
};
use crate::logistic::{norm_for_kappa, ProblemParams};
use crate::sim::{
    aggregate, make_environment, run_episode, stream, ArmSetKind, EnvSpec, Stream, ThetaSpec,
    TrajectoryLog,
};

pub const TRAJECTORY_FILE: &str = "trajectories.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const TRAJECTORY_HEADER: &str =
    "run_id,t,algorithm,regret_cum,elapsed_ns,op_count,h_size,coverage_flag";
pub const AGGREGATE_HEADER: &str =
    "algorithm,t,runs,regret_mean,regret_std,regret_min,regret_max,op_count_mean";

fn default_arm_set() -> ArmSetKind {
    ArmSetKind::Fixed
}
fn default_runs() -> usize {
    1
}
fn default_delta() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}

/// Flat experiment description. Exactly one of `kappa` (a random parameter
/// direction whose norm yields that κ) and `theta_star` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(alias = "d")]
    pub dim: usize,
    /// Norm bound `S` given to the learners; defaults to the parameter norm.
    #[serde(alias = "S", default, skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
    #[serde(default = "default_arm_set")]
    pub arm_set: ArmSetKind,
    #[serde(alias = "K", default, skip_serializing_if = "Option::is_none")]
    pub num_arms: Option<usize>,
    #[serde(alias = "T")]
    pub horizon: usize,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub algorithms: Vec<AlgorithmId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_override: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Record wall-clock time per round; when off the column is all zeros
    /// and the trajectory file is byte-reproducible.
    #[serde(default = "default_true")]
    pub timing: bool,
}

/// Quantities derived from a validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub params: ProblemParams,
    /// Norm of the environment parameter (for random directions).
    pub theta_norm: f64,
    pub tau: usize,
    pub tau_from_override: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("unknown field") || msg.contains("missing field"))
                .unwrap_or("config")
                .to_string();
            Error::config(field, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    /// Checks every field and derives the problem constants.
    pub fn validate(&self) -> Result<Resolved> {
        if self.dim < 1 {
            return Err(Error::config("dim", "must be at least 1"));
        }
        if self.horizon < 1 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.n_runs < 1 {
            return Err(Error::config("n_runs", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::config(
                "delta",
                format!("must lie in (0, 1], got {}", self.delta),
            ));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config(
                "algorithms",
                "at least one algorithm is required",
            ));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(Error::config(
                    "algorithms",
                    format!("`{a}` is listed twice"),
                ));
            }
        }
        match (self.arm_set, self.num_arms) {
            (ArmSetKind::UnitBall, _) => {
                if let Some(a) = self.algorithms.iter().find(|a| !a.supports_unit_ball()) {
                    return Err(Error::config(
                        "algorithms",
                        format!("`{a}` cannot run on the unit ball"),
                    ));
                }
            }
            (_, None) => return Err(Error::config("num_arms", "required for finite arm sets")),
            (_, Some(0)) => return Err(Error::config("num_arms", "must be at least 1")),
            _ => {}
        }
        let theta_norm = match (self.kappa, &self.theta_star) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::config(
                    "kappa",
                    "exactly one of `kappa` and `theta_star` must be given",
                ))
            }
            (Some(k), None) => {
                norm_for_kappa(k).map_err(|e| Error::config("kappa", e.to_string()))?
            }
            (None, Some(v)) => {
                if v.len() != self.dim {
                    return Err(Error::config(
                        "theta_star",
                        format!("has {} entries, expected {}", v.len(), self.dim),
                    ));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::config("theta_star", "entries must be finite"));
                }
                v.iter().map(|x| x * x).sum::<f64>().sqrt()
            }
        };
        let s = match self.norm_bound {
            Some(s) => {
                if s < theta_norm * (1.0 - 1e-12) {
                    return Err(Error::config(
                        "norm_bound",
                        format!("{s} is below the parameter norm {theta_norm}"),
                    ));
                }
                s
            }
            None => theta_norm,
        };
        let params = ProblemParams::new(self.dim, s, self.delta)
            .map_err(|e| Error::config("norm_bound", e.to_string()))?;
        let (tau, tau_from_override) = match self.tau_override {
            Some(0) => return Err(Error::config("tau_override", "must be at least 1")),
            Some(t) => (t, true),
            None => (theoretical_tau(&params, self.horizon)?, false),
        };
        Ok(Resolved {
            params,
            theta_norm,
            tau,
            tau_from_override,
        })
    }

    pub fn env_spec(&self, resolved: &Resolved) -> EnvSpec {
        EnvSpec {
            dim: self.dim,
            kind: self.arm_set,
            num_arms: self.num_arms.unwrap_or(0),
            theta: match &self.theta_star {
                Some(v) => ThetaSpec::Explicit(DVector::from_vec(v.clone())),
                None => ThetaSpec::Norm(resolved.theta_norm),
            },
            norm_bound: resolved.params.s,
        }
    }
}

/// Values that take precedence over the configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub dim: Option<usize>,
    pub norm_bound: Option<f64>,
    pub kappa: Option<f64>,
    pub theta_star: Option<Vec<f64>>,
    pub arm_set: Option<ArmSetKind>,
    pub num_arms: Option<usize>,
    pub horizon: Option<usize>,
    pub n_runs: Option<usize>,
    pub delta: Option<f64>,
    pub algorithms: Option<Vec<AlgorithmId>>,
    pub tau_override: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub timing: Option<bool>,
}

/// Merges an optional configuration file with overrides, then validates.
/// Without a file the overrides must supply every required field.
pub fn parse_config(text: Option<&str>, overrides: &ConfigOverrides) -> Result<ExperimentConfig> {
    const ALIASES: [(&str, &str); 4] = [
        ("dim", "d"),
        ("norm_bound", "S"),
        ("num_arms", "K"),
        ("horizon", "T"),
    ];
    let o = overrides;
    if o.kappa.is_some() && o.theta_star.is_some() {
        return Err(Error::config(
            "kappa",
            "exactly one of `kappa` and `theta_star` must be given",
        ));
    }
    let mut table: toml::Table = match text {
        Some(t) => {
            toml::from_str(t).map_err(|e| Error::config("config", e.message().to_string()))?
        }
        None => toml::Table::new(),
    };
    let mut put = |key: &str, value: Option<toml::Value>| {
        let Some(v) = value else { return };
        if let Some((_, alias)) = ALIASES.iter().find(|(k, _)| *k == key) {
            table.remove(*alias);
        }
        if key == "kappa" || key == "theta_star" {
            // Choosing one source of the parameter replaces the other.
            table.remove("kappa");
            table.remove("theta_star");
        }
        table.insert(key.to_string(), v);
    };
    let int = |v: Option<usize>| v.map(|x| toml::Value::Integer(x as i64));
    let floats =
        |v: &Vec<f64>| toml::Value::Array(v.iter().map(|x| toml::Value::Float(*x)).collect());
    put("dim", int(o.dim));
    put("norm_bound", o.norm_bound.map(toml::Value::Float));
    put("kappa", o.kappa.map(toml::Value::Float));
    put("theta_star", o.theta_star.as_ref().map(floats));
    put(
        "arm_set",
        o.arm_set
            .map(|k| toml::Value::String(arm_set_name(k).to_string())),
    );
    put("num_arms", int(o.num_arms));
    put("horizon", int(o.horizon));
    put("n_runs", int(o.n_runs));
    put("delta", o.delta.map(toml::Value::Float));
    put(
        "algorithms",
        o.algorithms.as_ref().map(|v| {
            toml::Value::Array(
                v.iter()
                    .map(|a| toml::Value::String(a.to_string()))
                    .collect(),
            )
        }),
    );
    put("tau_override", int(o.tau_override));
    put("seed", o.seed.map(|x| toml::Value::Integer(x as i64)));
    put(
        "output",
        o.output
            .as_ref()
            .map(|p| toml::Value::String(p.display().to_string())),
    );
    put("timing", o.timing.map(toml::Value::Boolean));
    let text = toml::to_string(&table).map_err(|e| Error::config("config", e.to_string()))?;
    ExperimentConfig::from_toml_str(&text)
}

fn arm_set_name(kind: ArmSetKind) -> &'static str {
    match kind {
        ArmSetKind::Fixed => "fixed",
        ArmSetKind::Contextual => "contextual",
        ArmSetKind::UnitBall => "unit-ball",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub run_id: u64,
    pub algorithm: AlgorithmId,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub resolved: Resolved,
    /// Successful cells ordered by run, then by the configured algorithm order.
    pub logs: Vec<TrajectoryLog>,
    pub failures: Vec<CellFailure>,
}

impl ExperimentReport {
    pub fn logs_for(&self, id: AlgorithmId) -> Vec<&TrajectoryLog> {
        self.logs.iter().filter(|l| l.algorithm == id).collect()
    }

    pub fn max_history(&self) -> usize {
        self.logs
            .iter()
            .flat_map(|l| l.rounds.iter().filter_map(|r| r.h_size))
            .max()
            .unwrap_or(0)
    }
}

/// Runs one (run, algorithm) cell.
pub fn run_cell(
    cfg: &ExperimentConfig,
    resolved: &Resolved,
    run_id: u64,
    id: AlgorithmId,
) -> Result<TrajectoryLog> {
    let mut env = make_environment(&cfg.env_spec(resolved), cfg.seed, run_id)?;
    let setup = LearnerSetup {
        params: resolved.params,
        horizon: cfg.horizon,
        tau: resolved.tau,
        eps_rule: EpsRule::InverseRound,
        unit_ball: cfg.arm_set == ArmSetKind::UnitBall,
    };
    let mut learner = build_learner(id, &setup)?;
    let slot = AlgorithmId::ALL.iter().position(|a| *a == id).unwrap_or(0) as u8;
    let mut rng = stream(cfg.seed, run_id, Stream::Perturbation, slot);
    run_episode(learner.as_mut(), &mut env, cfg.horizon, run_id, &mut rng)
}

/// Runs every cell in parallel. Failing cells are dropped and reported.
pub fn simulate(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let resolved = cfg.validate()?;
    let cells: Vec<(u64, AlgorithmId)> = (0..cfg.n_runs as u64)
        .flat_map(|r| cfg.algorithms.iter().map(move |a| (r, *a)))
        .collect();
    let results: Vec<(u64, AlgorithmId, Result<TrajectoryLog>)> = cells
        .into_par_iter()
        .map(|(r, a)| (r, a, run_cell(cfg, &resolved, r, a)))
        .collect();
    let mut logs = Vec::new();
    let mut failures = Vec::new();
    for (run_id, algorithm, res) in results {
        match res {
            Ok(log) => logs.push(log),
            Err(e) => failures.push(CellFailure {
                run_id,
                algorithm,
                error: e.to_string(),
            }),
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        resolved,
        logs,
        failures,
    })
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trajectories<W: Write>(report: &ExperimentReport, mut out: W) -> Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for log in &report.logs {
        for r in &log.rounds {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                log.run_id,
                r.t,
                log.algorithm,
                r.regret_cum,
                if report.config.timing {
                    r.elapsed_ns
                } else {
                    0
                },
                r.op_count,
                fmt_opt(r.h_size),
                fmt_opt(r.coverage.map(u8::from)),
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_aggregate<W: Write>(report: &ExperimentReport, mut out: W) -> Result<()> {
    writeln!(out, "{AGGREGATE_HEADER}")?;
    for id in &report.config.algorithms {
        let logs = report.logs_for(*id);
        if logs.is_empty() {
            continue;
        }
        let agg = aggregate(&logs)?;
        for i in 0..agg.mean.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                id,
                i + 1,
                agg.runs,
                agg.mean[i],
                agg.std[i],
                agg.min[i],
                agg.max[i],
                agg.op_count_mean[i]
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Everything needed to reproduce the run, including the constants chosen
/// by the implementation.
pub fn metadata(report: &ExperimentReport) -> serde_json::Value {
    let cfg = &report.config;
    let r = &report.resolved;
    let radius_kinds: BTreeMap<String, Option<&str>> = cfg
        .algorithms
        .iter()
        .map(|a| (a.to_string(), a.planning_radius().map(|k| k.as_str())))
        .collect();
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let envelope = AdaState::new(r.params)
        .map(|s| s.history_envelope(cfg.horizon))
        .ok();
    serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix": created,
        "config": cfg,
        "resolved": {
            "dim": r.params.dim,
            "norm_bound": r.params.s,
            "kappa": r.params.kappa,
            "delta": r.params.delta,
            "theta_norm": r.theta_norm,
            "tau": r.tau,
            "tau_source": if r.tau_from_override { "override" } else { "16*kappa*d*beta_T*log(1+T)" },
        },
        "radius_kinds": radius_kinds,
        "eps_rule": "1/t",
        "ecolog_diameter": { "ofu-ecolog": 1.0, "ts-ecolog": 1.0, "ada-ofu-ecolog": "2S, then diameter bound of the refreshed set" },
        "baseline_constants": BaselineConstants::new(&r.params, cfg.horizon),
        "seeds": { "seed": cfg.seed, "run_ids": (0..cfg.n_runs as u64).collect::<Vec<_>>() },
        "history": {
            "max_size": report.max_history(),
            "envelope_unit_constant": envelope,
            "worst_ratio": envelope.map(|e| report.max_history() as f64 / e),
        },
        "failures": report.failures,
    })
}

/// Writes the trajectory CSV, the aggregate CSV and the metadata sidecar.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trajectories(
        report,
        BufWriter::new(File::create(dir.join(TRAJECTORY_FILE))?),
    )?;
    write_aggregate(
        report,
        BufWriter::new(File::create(dir.join(AGGREGATE_FILE))?),
    )?;
    let meta = serde_json::to_string_pretty(&metadata(report))
        .map_err(|e| Error::config("metadata", e.to_string()))?;
    fs::write(dir.join(METADATA_FILE), meta + "\n")?;
    Ok(())
}

/// Validates, runs and writes everything under `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentReport> {
    let report = simulate(cfg)?;
    write_outputs(&report, dir)?;
    Ok(report)
}
