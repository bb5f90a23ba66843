//! `spacings-gof`: uniformity tests from m-spacings on the command line.
//!
//! Exit codes: 0 on success, 2 for parse and validation errors, 3 when a
//! simulation aborts on degenerate spacings, 1 for numerical failures.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spacings_gof::spacings::{Mode, Scaling};
use spacings_gof::Error;

use render::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::DegenerateAbort { .. }) => 3,
            CliError::Core(
                Error::QuadratureNotConverged { .. } | Error::LagFailure { .. } | Error::InternalConsistency(_),
            ) => 1,
            CliError::Io(_) | CliError::Json(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "spacings-gof", version, about = "Uniformity tests based on overlapping and disjoint m-spacings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Overlapping,
    Disjoint,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Overlapping => Mode::Overlapping,
            ModeArg::Disjoint => Mode::Disjoint,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScalingArg {
    /// h(n·D)
    ByN,
    /// h((n/m)·D)
    Normalized,
}

impl From<ScalingArg> for Scaling {
    fn from(s: ScalingArg) -> Scaling {
        match s {
            ScalingArg::ByN => Scaling::ByN,
            ScalingArg::Normalized => Scaling::Normalized,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Print JSON
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Print CSV
    #[arg(long)]
    csv: bool,
    /// Also write the output to this file
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutputArgs {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            Format::Table
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test a sample file for uniformity on [0, 1]
    Test {
        /// One value per line; blank lines and # comments are skipped
        file: PathBuf,
        #[arg(long, default_value = "greenwood")]
        h: String,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, value_enum, default_value = "overlapping")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "by-n")]
        scaling: ScalingArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Null moments (A₀, τ, σ², σ*², μ) for a list of orders
    Moments {
        #[arg(long, default_value = "greenwood")]
        h: String,
        /// Orders, e.g. `1,2,3` or `1..20`
        #[arg(long, default_value = "1")]
        m: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Efficacies e² for a list of orders
    Efficacy {
        #[arg(long, default_value = "greenwood")]
        h: String,
        #[arg(long, default_value = "1")]
        m: String,
        #[arg(long, value_enum, default_value = "overlapping")]
        mode: ModeArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Pitman efficiency of one test relative to another
    Are {
        /// `<h>/<mode>/<m>`, e.g. `greenwood/overlapping/10`; m may be omitted with --regime
        #[arg(long)]
        first: String,
        #[arg(long)]
        second: String,
        /// Growth regime `c,p` (m = c·n^p), given once per test
        #[arg(long, num_args = 1, action = clap::ArgAction::Append)]
        regime: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte-Carlo studies
    Simulate {
        #[command(subcommand)]
        study: SimCommand,
    },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value = "greenwood")]
    h: String,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, value_enum, default_value = "overlapping")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "by-n")]
    scaling: ScalingArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Write one CSV row per replication (rep, statistic, standardized, reject)
    #[arg(long)]
    rows: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Subcommand)]
enum SimCommand {
    /// Null distribution of the standardized statistic
    Null(SimArgs),
    /// Rejection rate under a contamination alternative
    Power {
        #[command(flatten)]
        sim: SimArgs,
        /// `cos:<k>:<theta> | bump:<center>:<width>:<theta> | table:<file>`
        #[arg(long)]
        path: String,
        /// Override δ = (nm)^{-1/4}; the report is then marked off-theory
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Null correlation with the disjoint Greenwood statistic
    Corr(SimArgs),
    /// Raw statistic mean and variance against the asymptotic ones
    Moments {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        path: Option<String>,
    },
    /// Sample size at which a second test matches the first one's power
    Match {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        h2: Option<String>,
        #[arg(long)]
        m2: Option<u32>,
        #[arg(long, value_enum, default_value = "disjoint")]
        mode2: ModeArg,
        #[arg(long, default_value_t = 0.6)]
        target_power: f64,
        #[arg(long, default_value = "cos:1:1")]
        path: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Test { file, h, m, mode, scaling, alpha, output } => {
            commands::test(&file, &h, m, mode.into(), scaling.into(), alpha, &output)
        }
        Command::Moments { h, m, output } => commands::moments(&h, &m, &output),
        Command::Efficacy { h, m, mode, output } => commands::efficacy(&h, &m, mode.into(), &output),
        Command::Are { first, second, regime, output } => commands::are(&first, &second, &regime, &output),
        Command::Simulate { study } => commands::simulate(study),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
