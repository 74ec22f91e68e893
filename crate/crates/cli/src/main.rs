//! `sglm`: simulation, fitting, rolling nowcasts and forecast evaluation with
//! sparse-group LASSO MIDAS regressions.

mod commands;
mod config;
mod data;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sgl_midas::simulation::Scenario;

use crate::commands::{execute, FitMode, Job, Manifest, ModelArg};
use crate::config::{Horizon, ProjectConfig};
use crate::data::read_json;
use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "sglm", version, about = "Sparse-group LASSO MIDAS regressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo scenario and write mean/standard-error tables.
    Simulate(SimulateArgs),
    /// Fit one sg-LASSO model on the full sample of a project.
    Fit(FitArgs),
    /// Rolling-window out-of-sample nowcasts.
    Nowcast(NowcastArgs),
    /// Compare two error series: relative RMSE, Diebold-Mariano test, CUMSFE.
    Evaluate(EvaluateArgs),
    /// Re-run the job recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Project JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Penalty level on the standardized problem.
    #[arg(long, required_unless_present = "cv", conflicts_with = "cv")]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0, conflicts_with = "cv")]
    alpha: f64,
    /// Select (alpha, lambda) by blocked cross-validation.
    #[arg(long)]
    cv: bool,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NowcastArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    horizon: Option<Horizon>,
    /// Rolling window length in low-frequency periods; defaults to the config's `window`.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_enum, default_value = "sgl")]
    model: ModelArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Two files with an `error` column (e.g. `nowcast` forecasts.csv);
    /// the second is compared against the first.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    errors: Vec<PathBuf>,
    /// Bartlett bandwidth of the DM variance; defaults to ⌊n^(1/3)⌋.
    #[arg(long)]
    hac_lags: Option<usize>,
    /// Apply the Harvey-Leybourne-Newbold small-sample correction.
    #[arg(long)]
    harvey: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn output_dir(out: Option<PathBuf>, cfg: &ProjectConfig) -> Result<PathBuf> {
    out.or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))
}

fn absolute(p: &Path) -> Result<PathBuf> {
    p.canonicalize().map_err(|e| CliError::io(p, e))
}

fn run(cli: Cli) -> Result<()> {
    let (job, out) = match cli.command {
        Command::Simulate(a) => {
            let mut scenario: Scenario = read_json(&a.scenario)?;
            if let Some(r) = a.replications {
                scenario.replications = r;
            }
            if let Some(s) = a.seed {
                scenario.seed = s;
            }
            scenario.validate()?;
            (Job::Simulate { scenario }, a.out)
        }
        Command::Fit(a) => {
            let config = ProjectConfig::load(&a.config)?;
            let fit = match a.lambda {
                Some(lambda) if !a.cv => FitMode::Fixed { lambda, alpha: a.alpha },
                _ => FitMode::Cv,
            };
            let out = output_dir(a.out, &config)?;
            (Job::Fit { config, fit }, out)
        }
        Command::Nowcast(a) => {
            let config = ProjectConfig::load(&a.config)?;
            let out = output_dir(a.out, &config)?;
            let job = Job::Nowcast {
                horizon: a.horizon.or(config.horizon),
                window: a.window.unwrap_or(config.window),
                model: a.model,
                config,
            };
            (job, out)
        }
        Command::Evaluate(a) => {
            let job = Job::Evaluate {
                errors_a: absolute(&a.errors[0])?,
                errors_b: absolute(&a.errors[1])?,
                hac_lags: a.hac_lags,
                harvey: a.harvey,
            };
            (job, a.out)
        }
        Command::Replay(a) => {
            let m: Manifest = read_json(&a.manifest)?;
            if let Job::Fit { config, .. } | Job::Nowcast { config, .. } = &m.job {
                config.validate()?;
            }
            (m.job, a.out)
        }
    };
    execute(&job, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
