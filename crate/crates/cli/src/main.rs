//! `rqco`: run circuit optimizations, verification suites and benchmarks.

mod bench;
mod check;
mod config;
mod error;
mod optimize;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "rqco", version, about = "Matrix-free Riemannian circuit optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn enabled(self) -> bool {
        self == OnOff::On
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Gradient,
    Hessian,
    Hvp,
    Kernels,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchKind {
    Kernels,
    Gradient,
    Hessian,
    Scaling,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize a circuit described by a JSON run configuration.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for random initialization; overrides the configured one.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "RQCO_WORKERS")]
        workers: Option<usize>,
        #[arg(long)]
        parity: Option<OnOff>,
        #[arg(long)]
        dedup: Option<OnOff>,
        /// Print one line per iteration to stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Compare kernels and derivatives against dense and finite-difference
    /// references.
    Check {
        #[arg(long, value_enum)]
        kind: CheckKind,
        #[arg(long, default_value_t = 3)]
        qubits: usize,
        #[arg(long, default_value_t = 4)]
        slots: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of random tangent directions for the gradient check.
        #[arg(long, default_value_t = 30)]
        directions: usize,
    },
    /// Time kernels and objective evaluations; writes bench.csv.
    Bench {
        #[arg(long, value_enum)]
        kind: BenchKind,
        #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 6, 8])]
        qubits: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![5usize])]
        layers: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize])]
        workers: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        parity: Option<OnOff>,
        #[arg(long)]
        dedup: Option<OnOff>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Optimize { config, out, seed, workers, parity, dedup, verbose } => {
            let overrides = optimize::Overrides {
                out,
                seed,
                workers,
                parity: parity.map(OnOff::enabled),
                dedup: dedup.map(OnOff::enabled),
                verbose,
            };
            optimize::run(&config, &overrides)
        }
        Command::Check { kind, qubits, slots, seed, directions } => check::run(kind, qubits, slots, seed, directions),
        Command::Bench { kind, qubits, layers, workers, repeats, seed, parity, dedup, out } => {
            let settings = bench::Settings {
                qubits,
                layers,
                workers,
                repeats,
                seed,
                parity: parity.is_some_and(OnOff::enabled),
                dedup: dedup.is_some_and(OnOff::enabled),
                out,
            };
            bench::run(kind, &settings)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
