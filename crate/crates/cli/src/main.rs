//! `rmdp`: solve, generate, benchmark and inspect robust MDP instances.
//!
//! Exit status is 0 on success, 2 when a solve hits `--max-iter` before
//! converging, and 1 on any input or usage error.

mod bench;
mod convert;
mod dyadic;
mod gen;
mod output;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "rmdp", version, about = "Robust policy iteration for L-infinity robust MDPs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Arithmetic backend.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Float)]
    pub mode: Mode,
    /// Value-iteration tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub eps: f64,
    /// Iteration cap for every solver loop.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub max_iter: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Float,
    Rational,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Pi,
    Vi,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Rmc,
    Rmdp,
    Game,
}

/// Generator flags shared by `gen` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct Shape {
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Mean support size.
    #[arg(long, default_value_t = 3.0)]
    pub density: f64,
    /// Radius range `lo:hi`.
    #[arg(long, default_value = "0:0.3")]
    pub delta: String,
    /// Cost range `lo:hi`.
    #[arg(long, default_value = "0:10")]
    pub cost: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance file.
    Solve {
        file: PathBuf,
        /// Overrides the discount factor stored in the file.
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long, value_enum, default_value_t = Algo::Pi)]
        algo: Algo,
        /// Writes the full solve trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random instance.
    Gen {
        #[command(flatten)]
        shape: Shape,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = Kind::Rmdp)]
        kind: Kind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve random RMDPs and check the iteration bounds; writes CSV.
    Bench {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        shape: Shape,
        /// Comma-separated discount factors.
        #[arg(long, default_value = "0.9")]
        gamma: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dyadic degree of signed subset sums against the closed-form bound.
    Dyadic {
        /// Comma-separated rationals, e.g. "1,1/2,3/4".
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        set: Option<String>,
        /// COUNT SIZE MAX_DENOM: random sets of SIZE positive rationals at most 1.
        #[arg(long, num_args = 3, value_names = ["COUNT", "SIZE", "MAX_DENOM"])]
        random: Option<Vec<u64>>,
        #[arg(long, default_value_t = 1)]
        coeff: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a turn-based stochastic game file to an RMDP file.
    ConvertGame {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    IterationLimit,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let common = &cli.common;
    match cli.command {
        Command::Solve { file, gamma, algo, trace, out } => {
            solve::run(common, &file, gamma.as_deref(), algo, trace.as_deref(), out.as_deref())
        }
        Command::Gen { shape, gamma, kind, out } => gen::run(common, &shape, gamma, kind, out.as_deref()),
        Command::Bench { count, shape, gamma, out } => bench::run(common, count, &shape, &gamma, out.as_deref()),
        Command::Dyadic { set, random, coeff, out } => {
            dyadic::run(common, set.as_deref(), random.as_deref(), coeff, out.as_deref())
        }
        Command::ConvertGame { file, out } => convert::run(common, &file, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::IterationLimit) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
