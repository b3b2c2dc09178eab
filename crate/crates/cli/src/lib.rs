//! Command-line front end: `solve`, `certify`, `interp-check` and `bench`.

pub mod commands;
pub mod error;
pub mod problem_file;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub use commands::{run, Outcome};
pub use error::CliError;
pub use problem_file::{load_problem, parse_problem, LoadedProblem, ProblemFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Which way random segments point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `sum(y - x) >= 0`: towards larger coordinates, where the kinks of the
    /// countable-kink objective accumulate.
    Forward,
    Reverse,
    Any,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum CommandKind {
    Solve,
    Certify,
    InterpCheck {
        segments: usize,
        declared_l: Option<f64>,
        declared_delta: Option<f64>,
        orientation: Orientation,
    },
    Bench {
        epsilons: Vec<f64>,
    },
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub problem_file: PathBuf,
    pub epsilon: Option<f64>,
    pub theta0: Option<f64>,
    pub seed: u64,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub max_iter_factor: usize,
}

#[derive(Debug, Parser)]
#[command(name = "mirrorcert", version, about = "Adaptive mirror descent with certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver and write the report with its step log.
    Solve(CommonArgs),
    /// Run the solver and audit the run against its guarantees.
    Certify(CommonArgs),
    /// Check the interpolation inequality on seeded random segments.
    InterpCheck(InterpArgs),
    /// Compare iteration counts with the theoretical bound over an epsilon sweep.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Problem definition (JSON).
    pub problem_file: PathBuf,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub theta0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Safety cap as a multiple of the theoretical iteration bound.
    #[arg(long, default_value_t = 10)]
    pub max_iter_factor: usize,
}

#[derive(Debug, Args)]
pub struct InterpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1000)]
    pub segments: usize,
    /// Declared L; defaults to the problem's declared value.
    #[arg(long)]
    pub declared_l: Option<f64>,
    /// Declared delta; defaults to the problem's declared value.
    #[arg(long)]
    pub declared_delta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Orientation::Forward)]
    pub orientation: Orientation,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.02])]
    pub epsilons: Vec<f64>,
}

impl From<Command> for RunConfig {
    fn from(cmd: Command) -> Self {
        let (command, common) = match cmd {
            Command::Solve(c) => (CommandKind::Solve, c),
            Command::Certify(c) => (CommandKind::Certify, c),
            Command::InterpCheck(a) => (
                CommandKind::InterpCheck {
                    segments: a.segments,
                    declared_l: a.declared_l,
                    declared_delta: a.declared_delta,
                    orientation: a.orientation,
                },
                a.common,
            ),
            Command::Bench(a) => (CommandKind::Bench { epsilons: a.epsilons }, a.common),
        };
        RunConfig {
            command,
            problem_file: common.problem_file,
            epsilon: common.epsilon,
            theta0: common.theta0,
            seed: common.seed,
            output_format: common.format,
            output_path: common.out,
            max_iter_factor: common.max_iter_factor,
        }
    }
}
