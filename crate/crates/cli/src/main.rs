//! `sigeo`: batch front end to the statistical-geometry toolkit.
//!
//! Exit status: 0 on success, 2 when a property check fails, 1 on usage,
//! input or IO errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "sigeo",
    version,
    about = "Fisher metric, Fisher distance, Hausdorff-Jeffrey measure and Cramer-Rao checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fisher matrix, spectrum and rank at one parameter.
    FisherMatrix(commands::FisherArgs),
    /// Fisher distance estimate by path optimization.
    Distance(commands::DistanceArgs),
    /// Checks distance ≥ total-variation distance.
    TvCheck(commands::TvArgs),
    /// Symmetry, triangle and identity checks on parameter triples.
    MetricAxioms(commands::AxiomArgs),
    /// Pushes a model measure (and optionally a tangent) through a Markov kernel.
    Pushforward(commands::PushforwardArgs),
    /// Random data-processing-inequality draws.
    DpiSweep(commands::DpiArgs),
    /// Fisher-metric equality under a kernel on sampled tangents.
    Sufficiency(commands::SufficiencyArgs),
    /// Greedy-cover Hausdorff premeasures over a parameter box.
    Hausdorff(commands::HausdorffArgs),
    /// Jeffrey measure of a parameter box, optionally against the Hausdorff estimate.
    Jeffrey(commands::JeffreyArgs),
    /// Cramér-Rao gap of an estimator.
    CramerRao(commands::CramerRaoArgs),
    /// Weak derivative exchange next to total-variation non-convergence.
    WeakDemo(commands::WeakArgs),
    /// Runs the acceptance criteria.
    VerifyAll(commands::VerifyArgs),
}

/// Options shared by every subcommand.
#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct Common {
    /// Flat JSON config file; flags override its keys.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Master seed (falls back to SIGEO_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON summary here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write the command's table as whitespace-separated CSV.
    #[arg(long, value_name = "FILE")]
    pub emit: Option<PathBuf>,
    /// Leave the timestamp out of the summary.
    #[arg(long)]
    pub no_timestamp: bool,
}

impl Common {
    pub fn seed(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var("SIGEO_SEED") {
            Ok(s) => s
                .trim()
                .parse()
                .with_context(|| format!("SIGEO_SEED=`{s}` is not an unsigned integer")),
            Err(_) => Ok(0),
        }
    }
}

pub trait HasCommon {
    fn common(&self) -> &Common;
}

/// Applies the config file named by `--config`, keeping flag values.
pub fn resolve<T: Serialize + DeserializeOwned + HasCommon>(args: T) -> Result<T> {
    let path = args.common().config.clone();
    let map = path.as_deref().map(config::load).transpose()?;
    config::merge(args, map.as_ref())
}

fn run(cli: Cli) -> Result<bool> {
    let (summary, common) = match cli.command {
        Command::FisherMatrix(a) => commands::fisher_matrix_cmd(resolve(a)?)?,
        Command::Distance(a) => commands::distance(resolve(a)?)?,
        Command::TvCheck(a) => commands::tv_check(resolve(a)?)?,
        Command::MetricAxioms(a) => commands::metric_axioms(resolve(a)?)?,
        Command::Pushforward(a) => commands::pushforward(resolve(a)?)?,
        Command::DpiSweep(a) => commands::dpi_sweep(resolve(a)?)?,
        Command::Sufficiency(a) => commands::sufficiency(resolve(a)?)?,
        Command::Hausdorff(a) => commands::hausdorff(resolve(a)?)?,
        Command::Jeffrey(a) => commands::jeffrey(resolve(a)?)?,
        Command::CramerRao(a) => commands::cramer_rao(resolve(a)?)?,
        Command::WeakDemo(a) => commands::weak_demo(resolve(a)?)?,
        Command::VerifyAll(a) => commands::verify_all(resolve(a)?)?,
    };
    summary.emit(common.out.as_deref(), !common.no_timestamp)?;
    Ok(summary.passed.unwrap_or(true))
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
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
