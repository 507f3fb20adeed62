//! `exlab`: command-line driver for the exclusion-lab experiments.
//!
//! Exit codes: 0 success (all verdicts pass), 1 runtime failure or a failed
//! verdict, 2 usage or configuration error, 3 state-space cap exceeded.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use exclusion_lab::Error;

#[derive(Parser, Debug)]
#[command(name = "exlab", version, about = "Exclusion, interchange and chameleon process experiments")]
pub struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true, env = "EXLAB_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Worker threads for trial-level parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Cap on enumerated states for exact computations.
    #[arg(long = "max-states", global = true, default_value_t = 200_000)]
    pub max_states: usize,
    /// Cap on the dimension of dense eigen and linear solves.
    #[arg(long = "max-dense", global = true, default_value_t = 5_000)]
    pub max_dense: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a process and write its event trace and per-trial summary.
    Simulate(SimulateArgs),
    /// Check one of the exact or statistical identities.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Exact mixing and relaxation times of exclusion on tori.
    Mixing(MixingArgs),
    /// Half-torus occupancy experiment over a grid of times.
    LowerBound(LowerBoundArgs),
    /// Evaluate the time integrals and the mixing bound over a grid.
    BoundEval(BoundEvalArgs),
    /// Run chameleon processes to absorption.
    Absorb(AbsorbArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Exclusion,
    Interchange,
    Chameleon,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub graph: String,
    #[arg(long, value_enum, default_value_t = Process::Chameleon)]
    pub process: Process,
    /// Black balls (chameleon).
    #[arg(long, default_value_t = 0)]
    pub b: usize,
    /// Particles (exclusion and interchange).
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
}

#[derive(Subcommand, Debug)]
pub enum VerifyCommand {
    /// Interchange law of the first white ball against chameleon redness.
    Lemma1(Lemma1Args),
    /// Tuple distance against the sum of conditional distances.
    Lemma12(Lemma12Args),
    /// Depinking arithmetic, martingale increments and P(A) = 1/m.
    Martingale(MartingaleArgs),
    /// Heat-kernel time bound with a fitted constant.
    Prop9(Prop9Args),
    /// Derivative of the expected time to the next depinking.
    Prop11(Prop11Args),
    /// Exact conditional distance against its Monte Carlo bound.
    Lemma2(Lemma2Args),
}

#[derive(Args, Debug, Serialize)]
pub struct Lemma1Args {
    #[arg(long)]
    pub graph: String,
    #[arg(long, default_value_t = 0)]
    pub b: usize,
    #[arg(long)]
    pub t: f64,
    /// Largest accepted discrepancy.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct Lemma12Args {
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
    /// Vertices.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Tuple length.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct MartingaleArgs {
    #[arg(long)]
    pub graph: String,
    #[arg(long, default_value_t = 0)]
    pub b: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct Prop9Args {
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3])]
    pub d: Vec<usize>,
    #[arg(long = "L", value_delimiter = ',', default_values_t = [4usize, 6, 8])]
    pub l: Vec<usize>,
    /// Reference constant the grid must stay under.
    #[arg(long = "D", default_value_t = 5.18937451377565e-2)]
    pub big_d: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct Prop11Args {
    #[arg(long, default_value = "path:n=5")]
    pub graph: String,
    #[arg(long, default_value_t = 1)]
    pub b: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3])]
    pub eps: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct Lemma2Args {
    #[arg(long)]
    pub graph: String,
    #[arg(long, default_value_t = 1)]
    pub b: usize,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct MixingArgs {
    #[arg(long = "L", value_delimiter = ',')]
    pub l: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct LowerBoundArgs {
    #[arg(long = "L")]
    pub l: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long = "t-grid", value_delimiter = ',', required = true)]
    pub t_grid: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundEvalArgs {
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    pub big_c: f64,
    #[arg(long = "L", value_delimiter = ',', required = true)]
    pub l: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub d: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub b: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct AbsorbArgs {
    #[arg(long)]
    pub graph: String,
    #[arg(long, default_value_t = 0)]
    pub b: usize,
    #[arg(long, default_value_t = 1_000)]
    pub trials: usize,
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Lib(Error),
    /// Ran to completion but a verdict failed.
    Verdict,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Usage(_) => 2,
        Failure::Verdict => 1,
        Failure::Lib(e) => match e {
            Error::CapExceeded { .. } => 3,
            Error::InvalidGraph(_)
            | Error::UnknownEdge(..)
            | Error::InvalidConfig(_)
            | Error::InvalidArgument(_)
            | Error::Parse(_) => 2,
            _ => 1,
        },
    }
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::Verdict => eprintln!("one or more verdicts failed"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
