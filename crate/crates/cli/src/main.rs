//! `logband` — run logistic-bandit experiments or the invariant suites.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use logband::checks;
use logband::experiment::{self, ConfigOverrides};
use logband::{AlgorithmId, ArmSetKind, Error};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUN: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Arms {
    Fixed,
    Contextual,
    UnitBall,
}

impl From<Arms> for ArmSetKind {
    fn from(a: Arms) -> Self {
        match a {
            Arms::Fixed => ArmSetKind::Fixed,
            Arms::Contextual => ArmSetKind::Contextual,
            Arms::UnitBall => ArmSetKind::UnitBall,
        }
    }
}

/// Logistic-bandit experiment runner. Flags override values from --config.
#[derive(Debug, Parser)]
#[command(name = "logband", version, about)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: `output` from the config, else `./out`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Comma-separated algorithm ids.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    algos: Option<Vec<String>>,
    /// Number of independent runs.
    #[arg(long, value_name = "N")]
    runs: Option<usize>,
    /// Run the invariant suites instead of an experiment.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    dim: Option<usize>,
    /// Target κ; the parameter gets the matching norm and a random direction.
    #[arg(long)]
    kappa: Option<f64>,
    /// Explicit parameter, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta_star: Option<Vec<f64>>,
    /// Norm bound S given to the learners.
    #[arg(long)]
    norm_bound: Option<f64>,
    #[arg(long, value_enum)]
    arms: Option<Arms>,
    #[arg(long)]
    num_arms: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Warm-up length replacing the theoretical one.
    #[arg(long)]
    tau: Option<usize>,
    /// Write zeros in the elapsed_ns column (byte-reproducible output).
    #[arg(long)]
    no_timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.check {
        return run_checks(cli.seed.unwrap_or(0));
    }
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let report = match experiment::run_experiment(&cfg, &out) {
        Ok(r) => r,
        Err(e @ Error::Config { .. }) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            return ExitCode::from(EXIT_RUN);
        }
    };
    println!(
        "{} cells, {} rounds each, tau = {}; wrote {}",
        report.logs.len() + report.failures.len(),
        cfg.horizon,
        report.resolved.tau,
        out.display()
    );
    for id in &cfg.algorithms {
        let logs = report.logs_for(*id);
        if logs.is_empty() {
            continue;
        }
        let mean = logs.iter().map(|l| l.final_regret()).sum::<f64>() / logs.len() as f64;
        println!("  {id:<16} mean final regret {mean:.3}");
    }
    if !report.failures.is_empty() {
        for f in &report.failures {
            eprintln!("run {} {} failed: {}", f.run_id, f.algorithm, f.error);
        }
        return ExitCode::from(EXIT_RUN);
    }
    ExitCode::SUCCESS
}

fn load_config(cli: &Cli) -> logband::Result<experiment::ExperimentConfig> {
    let text = match &cli.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| Error::Config {
            field: "config".into(),
            reason: format!("cannot read {}: {e}", p.display()),
        })?),
        None => None,
    };
    let algorithms = match &cli.algos {
        Some(list) => Some(
            list.iter()
                .map(|s| s.trim().parse::<AlgorithmId>())
                .collect::<logband::Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let overrides = ConfigOverrides {
        dim: cli.dim,
        norm_bound: cli.norm_bound,
        kappa: cli.kappa,
        theta_star: cli.theta_star.clone(),
        arm_set: cli.arms.map(Into::into),
        num_arms: cli.num_arms,
        horizon: cli.horizon,
        n_runs: cli.runs,
        delta: cli.delta,
        algorithms,
        tau_override: cli.tau,
        seed: cli.seed,
        output: cli.out.clone(),
        timing: cli.no_timing.then_some(false),
    };
    experiment::parse_config(text.as_deref(), &overrides)
}

fn run_checks(seed: u64) -> ExitCode {
    let outcomes = checks::run_all(seed);
    for o in &outcomes {
        println!("{o}");
    }
    if outcomes.iter().all(|o| o.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    }
}
