//! Command-line front end: builds a scenario from the built-in presets, a
//! configuration file and `--set` overrides, runs it and writes CSV files.

pub mod config;
pub mod output;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use pap_core::analysis::{
    attraction_bounds, derived_constants, observer_error_peak, performance_report, ObserverBoundInputs,
};
use pap_core::{run_monte_carlo, run_scenario, PapError, PapRequirements, ScenarioConfig, SimulationTrace};
use thiserror::Error;

pub use config::{apply_config, apply_overrides, parse_config, ConfigError};
pub use output::{write_summary_csv, write_trace_csv, CaseMetrics, CaseSummary};

#[derive(Debug, Parser)]
#[command(name = "pap", version, about = "Prescribed-performance attitude control simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub scenario: Scenario,

    /// Configuration file applied on top of the selected preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Extra `section.key=value` settings, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Master seed (overrides `scenario.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Observer error bound for the theory constants; by default the
    /// largest `‖d − d̂‖` after `--transient` seconds.
    #[arg(long, global = true)]
    pub xi_m: Option<f64>,

    /// Seconds excluded from the data-driven `ξ_m`.
    #[arg(long, global = true, default_value_t = 10.0)]
    pub transient: f64,

    /// Also write one trace per Monte Carlo case.
    #[arg(long, global = true)]
    pub traces: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Scenario {
    /// Tracking from rest under the periodic disturbance.
    Normal,
    /// Initial tumble plus a torque pulse at t = 100 s.
    Robust,
    /// Random initial attitudes, run in parallel.
    Montecarlo,
    /// Nominal preset modified by a required configuration file.
    Custom,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("simulation failed: {0}")]
    Simulation(#[from] PapError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("the custom scenario needs --config")]
    MissingConfig,
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 for a diverged
    /// integration, 4 for I/O and 5 for other simulation failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::MissingConfig => 2,
            CliError::Simulation(PapError::NonFiniteState { .. }) => 3,
            CliError::Io { .. } => 4,
            CliError::Simulation(_) => 5,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Resolves the scenario described by the command line.
pub fn build_config(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let base = match cli.scenario {
        Scenario::Normal | Scenario::Custom => ScenarioConfig::nominal(),
        Scenario::Robust => ScenarioConfig::robust(),
        Scenario::Montecarlo => ScenarioConfig::monte_carlo(),
    };
    let mut cfg = match &cli.config {
        Some(path) => apply_config(&base, &fs::read_to_string(path).map_err(io_err(path))?)?,
        None if cli.scenario == Scenario::Custom => return Err(CliError::MissingConfig),
        None => base,
    };
    cfg = apply_overrides(&cfg, &cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Performance metrics and theory bounds of one finished run.
pub fn summarize(
    cfg: &ScenarioConfig,
    trace: &SimulationTrace,
    xi_m: Option<f64>,
    transient: f64,
) -> Result<CaseMetrics, PapError> {
    let report = performance_report(trace, cfg.gains.tube_attitude, &PapRequirements::default())?;
    let xi_m = xi_m.unwrap_or_else(|| observer_error_peak(trace, transient));
    let constants = derived_constants(&cfg.gains, &cfg.spacecraft, &cfg.observer, xi_m, &ObserverBoundInputs::default())?;
    let first = trace.rows.first().ok_or(PapError::EmptyTrace)?;
    let bounds = if constants.feasible {
        attraction_bounds(first.barrier_attitude, first.barrier_rate, &constants, &cfg.gains)?
    } else {
        constants
    };
    Ok(CaseMetrics { report, xi_m, bounds })
}

/// Runs the invocation and reports written files on `log`.
pub fn run(cli: &Cli, mut log: impl Write) -> Result<(), CliError> {
    let cfg = build_config(cli)?;
    fs::create_dir_all(&cli.out).map_err(io_err(&cli.out))?;
    let file = |suffix: &str| cli.out.join(format!("{}_{suffix}.csv", cfg.name));
    let cases = if cli.scenario == Scenario::Montecarlo {
        let keep = cli.traces;
        let results = run_monte_carlo(&cfg, |case_cfg, trace| {
            let metrics = summarize(case_cfg, &trace, cli.xi_m, cli.transient)?;
            Ok((metrics, keep.then_some(trace)))
        })?;
        let mut cases = Vec::with_capacity(results.len());
        for (case, outcome) in results {
            let outcome = match outcome {
                Ok((metrics, trace)) => {
                    if let Some(trace) = trace {
                        let path = file(&format!("case{case:03}_trace"));
                        write_trace_csv(&trace, &path).map_err(io_err(&path))?;
                    }
                    Ok(metrics)
                }
                Err(e) => Err(e),
            };
            cases.push(CaseSummary { case, outcome });
        }
        output::write_failures(&cases, &mut log).map_err(io_err(Path::new("<stdout>")))?;
        cases
    } else {
        let trace = run_scenario(&cfg)?;
        let path = file("trace");
        write_trace_csv(&trace, &path).map_err(io_err(&path))?;
        writeln!(log, "wrote {}", path.display()).map_err(io_err(Path::new("<stdout>")))?;
        vec![CaseSummary { case: 0, outcome: Ok(summarize(&cfg, &trace, cli.xi_m, cli.transient)?) }]
    };
    let path = file("summary");
    write_summary_csv(&cases, &path).map_err(io_err(&path))?;
    let satisfied = cases.iter().filter(|c| c.outcome.as_ref().is_ok_and(|m| m.report.pap_satisfied)).count();
    writeln!(log, "wrote {} ({satisfied}/{} cases meet the performance requirements)", path.display(), cases.len())
        .map_err(io_err(Path::new("<stdout>")))
}
