//! `idfactor`: factor the identity through a matrix or a matrix path, and
//! check the results from the stored artifacts alone.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod out;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use out::{Failure, Summary};

#[derive(Parser)]
#[command(
    name = "idfactor",
    version,
    about = "Factor the identity through matrices with large columns",
    after_help = "EXIT CODES:\n\
                  \n  0  pass\
                  \n  1  I/O, parse or argument error\
                  \n  2  a hypothesis on the input fails\
                  \n  3  the recomputed certificate fails\
                  \n\nEvery run prints one `key=value` summary line on stdout."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor a matrix: writes PREFIX.L, PREFIX.R and PREFIX.cert
    Factor(FactorArgs),
    /// Factor a matrix path: writes PREFIX.plan, PREFIX.cert and optionally PREFIX.samples
    FactorPath(FactorPathArgs),
    /// Recompute a static certificate from A, PREFIX.L and PREFIX.R
    Verify(VerifyArgs),
    /// Recompute a path certificate from the path, PREFIX.plan and PREFIX.samples
    VerifyPath(VerifyPathArgs),
    /// Write diag(1, theta, ..., theta) and optionally factor it at rank n
    Witness(WitnessArgs),
    /// Print the guaranteed ranks for N and theta
    Bounds(BoundsArgs),
    /// Seeded sweep of random instances, written as CSV
    Bench(BenchArgs),
    /// Generate a test path
    GenPath(GenPathArgs),
}

#[derive(Args)]
struct RankArgs {
    /// Rank to factor through (default: the guaranteed rank)
    #[arg(long)]
    n: Option<usize>,
    /// Allow a rank above the guaranteed one
    #[arg(long, requires = "n")]
    force: bool,
}

#[derive(Args)]
struct FactorArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_prefix: PathBuf,
    #[command(flatten)]
    rank: RankArgs,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Factor A/‖A‖ and scale L back, for inputs with ‖A‖ > 1
    #[arg(long)]
    rescale: bool,
}

#[derive(Args)]
struct FactorPathArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_prefix: PathBuf,
    #[command(flatten)]
    rank: RankArgs,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Uniform points in the certificate grid
    #[arg(long, default_value_t = 4001)]
    grid: usize,
    /// Store L(t), R(t) at this many uniform points
    #[arg(long, default_value_t = 0)]
    samples: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_prefix: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// The factors were produced with --rescale
    #[arg(long)]
    rescale: bool,
}

#[derive(Args)]
struct VerifyPathArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_prefix: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 4001)]
    grid: usize,
}

#[derive(Args)]
struct WitnessArgs {
    #[arg(long = "N")]
    big_n: usize,
    #[arg(long)]
    theta: f64,
    /// Factor the witness at this rank and compare ‖L‖‖R‖ with 1/theta
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    output_prefix: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long = "N")]
    big_n: usize,
    #[arg(long)]
    theta: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma separated N:theta pairs
    #[arg(
        long,
        default_value = "125:0.25,125:0.5,125:1,1000:0.25,1000:0.5,1000:1,8000:0.25,8000:0.5,8000:1"
    )]
    sweep: String,
    /// Instances per sweep entry
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output_prefix: PathBuf,
    /// Write 0 in the millis column so the CSV depends only on the seed
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PathKind {
    Constant,
    Rotation,
    Random,
}

#[derive(Args)]
struct GenPathArgs {
    #[arg(long, value_enum)]
    kind: PathKind,
    #[arg(long = "N")]
    big_n: usize,
    /// Segment count (the constant kind always has one)
    #[arg(long, default_value_t = 50)]
    segments: usize,
    /// Lower bound for the column norms (constant and random kinds)
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Givens rotations per segment (random kind; default N/2)
    #[arg(long)]
    rotations: Option<usize>,
    #[arg(long)]
    output_prefix: PathBuf,
}

fn run(cmd: Command, s: &mut Summary) -> Result<bool, Failure> {
    match cmd {
        Command::Factor(a) => commands::factor(a, s),
        Command::FactorPath(a) => commands::factor_path(a, s),
        Command::Verify(a) => commands::verify(a, s),
        Command::VerifyPath(a) => commands::verify_path(a, s),
        Command::Witness(a) => commands::witness(a, s),
        Command::Bounds(a) => commands::bounds(a, s),
        Command::Bench(a) => commands::bench(a, s),
        Command::GenPath(a) => commands::gen_path(a, s),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Factor(_) => "factor",
        Command::FactorPath(_) => "factor-path",
        Command::Verify(_) => "verify",
        Command::VerifyPath(_) => "verify-path",
        Command::Witness(_) => "witness",
        Command::Bounds(_) => "bounds",
        Command::Bench(_) => "bench",
        Command::GenPath(_) => "gen-path",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let mut s = Summary::new("none");
            s.error(1, &e.kind().to_string());
            return s.finish();
        }
    };
    let mut s = Summary::new(command_name(&cli.command));
    match run(cli.command, &mut s) {
        Ok(true) => s.status("pass", 0),
        Ok(false) => s.status("fail", 3),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            s.error(f.code, &format!("{:#}", f.error));
        }
    }
    s.finish()
}
