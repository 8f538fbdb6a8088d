//! Command-line interface. Angles are in radians and `hbar` defaults to 1.

pub mod analysis;
pub mod output;
pub mod scenario_file;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenarios::catalog;

use analysis::{angles_for, evolution_table, Analysis};
use output::{emit, json_report, Format, Metadata};
use scenario_file::{load, LoadedScenario, ScenarioFile, ScenarioSource};
use verify::{render_table, verify_scenario, VerifyOptions, DEFAULT_ORACLE_TOL, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const TOL_ENV: &str = "PHASEFRAC_TOL";

#[derive(Debug, Parser)]
#[command(
    name = "phasefrac",
    version,
    about = "Phase decomposition of unitary quantum evolution",
    after_help = "Scenario files are JSON with \"schema\": 1; complex entries are [re, im] pairs. \
                  hbar defaults to 1 and all angles are in radians.\n\
                  Exit codes: 0 success, 1 invariant violated, 2 invalid input, 3 numerical failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sampled states, overlap with the initial state and the unwrapped total phase.
    Evolve(RunArgs),
    /// Total, dynamical, geometric and orthogonal phases with fractional-law residuals.
    Phases(RunArgs),
    /// Step lengths, circuitousness, contraction factor, kernel and path length.
    Geometry(RunArgs),
    /// Mandelstam-Tamm and geometric-phase speed limits as a JSON report.
    Qsl(QslArgs),
    /// Run the invariant battery and print a table of maximum residuals.
    Verify(VerifyArgs),
    /// Built-in scenarios.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCommand {
    /// List built-in scenario names.
    List,
    /// Print a built-in scenario as a scenario file.
    Show { name: String },
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Scenario file path or builtin:NAME.
    #[arg(long, value_name = "PATH|builtin:NAME")]
    pub scenario: ScenarioSource,
    /// Number of time steps; defaults to the scenario's own.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Fail on exact nodes of the overlap instead of continuing across them.
    #[arg(long)]
    pub strict_nodes: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Output file, written atomically; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct QslArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["scenario", "all"]))]
pub struct VerifyArgs {
    #[arg(long, value_name = "PATH|builtin:NAME")]
    pub scenario: Option<ScenarioSource>,
    /// Every built-in scenario.
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Residual tolerance; defaults to $PHASEFRAC_TOL or 1e-5.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also compare against the brute-force oracle.
    #[arg(long)]
    pub deep: bool,
    /// Relative tolerance for oracle comparisons.
    #[arg(long, default_value_t = DEFAULT_ORACLE_TOL)]
    pub oracle_tol: f64,
    #[arg(long)]
    pub strict_nodes: bool,
    /// Also write the full verdicts as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    // An unwritable --out path is a usage problem, not a numerical one.
    if e.is_input_error() || matches!(e, Error::Io(_)) {
        EXIT_INPUT
    } else {
        EXIT_NUMERICAL
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    if let Error::PhaseResolutionExceeded { .. } = e {
        eprintln!("hint: the phase moves too far between samples; rerun with a larger --steps");
    }
    exit_code(e)
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => report(&e),
    }
}

fn resolve(source: &SourceArgs) -> Result<(LoadedScenario, usize)> {
    let loaded = load(&source.scenario)?;
    let steps = source.steps.unwrap_or(loaded.scenario.default_steps);
    Ok((loaded, steps))
}

fn metadata(command: &str, loaded: &LoadedScenario, steps: usize) -> Metadata {
    Metadata::new(command, &loaded.scenario.name, &loaded.sha256, steps, loaded.scenario.schedule.hbar())
}

fn env_tolerance() -> Result<Option<f64>> {
    match std::env::var(TOL_ENV) {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t > 0.0)
            .map(Some)
            .ok_or_else(|| Error::ParamOutOfRange(format!("{TOL_ENV} is not a positive number: {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Evolve(args) => {
            let (loaded, steps) = resolve(&args.source)?;
            let traj = loaded.scenario.evolve(steps)?;
            let angles = angles_for(&traj, args.source.strict_nodes)?;
            let table = evolution_table(&traj, &angles);
            emit(args.out.as_deref(), &table.render(args.format, &metadata("evolve", &loaded, steps)))?;
        }
        Command::Phases(args) => {
            let (loaded, steps) = resolve(&args.source)?;
            let a = Analysis::run(&loaded.scenario, steps, args.source.strict_nodes)?;
            emit(args.out.as_deref(), &a.phases_table().render(args.format, &metadata("phases", &loaded, steps)))?;
        }
        Command::Geometry(args) => {
            let (loaded, steps) = resolve(&args.source)?;
            let a = Analysis::run(&loaded.scenario, steps, args.source.strict_nodes)?;
            let m = metadata("geometry", &loaded, steps);
            emit(args.out.as_deref(), &a.geometry_table().render(args.format, &m))?;
        }
        Command::Qsl(args) => {
            let (loaded, steps) = resolve(&args.source)?;
            let a = Analysis::run(&loaded.scenario, steps, args.source.strict_nodes)?;
            let q = a.speed_limits()?;
            emit(args.out.as_deref(), &json_report(&metadata("qsl", &loaded, steps), &q))?;
        }
        Command::Verify(args) => return verify_command(args),
        Command::Scenario { command: ScenarioCommand::List } => {
            let mut out = String::new();
            for s in catalog() {
                out.push_str(&format!("{:<18} {}\n", s.name, s.description));
            }
            emit(None, &out)?;
        }
        Command::Scenario { command: ScenarioCommand::Show { name } } => {
            let s = crate::scenarios::builtin(&name)?;
            emit(None, &ScenarioFile::from_scenario(&s).to_json())?;
        }
    }
    Ok(EXIT_OK)
}

fn verify_command(args: VerifyArgs) -> Result<i32> {
    let tol = match args.tol {
        Some(t) if t.is_finite() && t > 0.0 => t,
        Some(t) => return Err(Error::ParamOutOfRange(format!("--tol must be positive, got {t}"))),
        None => env_tolerance()?.unwrap_or(DEFAULT_TOL),
    };
    let opts = VerifyOptions {
        steps: args.steps,
        tol,
        oracle_tol: args.oracle_tol,
        deep: args.deep,
        strict_nodes: args.strict_nodes,
    };
    let scenarios = if args.all {
        catalog()
    } else {
        vec![load(args.scenario.as_ref().expect("clap requires a target"))?.scenario]
    };
    let mut verdicts: Vec<_> = scenarios.par_iter().map(|s| verify_scenario(s, &opts)).collect();
    verdicts.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    emit(None, &render_table(&verdicts))?;
    if let Some(path) = &args.out {
        let mut s = serde_json::to_string_pretty(&verdicts).expect("verdicts serialize");
        s.push('\n');
        output::write_atomic(path, &s)?;
    }
    let code = if verdicts.iter().any(|v| v.numerical_failure) {
        EXIT_NUMERICAL
    } else if verdicts.iter().any(|v| v.error.is_some()) {
        EXIT_INPUT
    } else if verdicts.iter().all(|v| v.passed()) {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    };
    Ok(code)
}
