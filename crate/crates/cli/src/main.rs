//! `primepca`: simulate partially observed data, fit principal subspaces,
//! run Monte Carlo benchmarks and compare stored frames.
//!
//! Exit status is 0 on success, 2 for usage errors and malformed configs, 1
//! for failures while running.

mod commands;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "primepca", version, about = "PCA with heterogeneous missing data")]
struct Cli {
    /// Seed for simulation; for `bench` it replaces the config's base_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (`eval`: output file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a data matrix and mask; write observed.csv, complete.csv, mask.csv, frame.csv.
    Simulate(SimulateArgs),
    /// Estimate a frame from a partially observed matrix; write frame.csv and scores.csv.
    Fit(FitArgs),
    /// Run an experiment config; write report.csv, trace.csv and report.json.
    Bench(BenchArgs),
    /// Scores and covariance spectrum for a given frame; write scores.csv and spectrum.csv.
    Scores(ScoresArgs),
    /// Print the sin-theta loss and two-to-infinity distance between two frames.
    Eval(EvalArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    DenseCsv,
    CoordinateTriplet,
}

impl From<Format> for primepca::data::PartialFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::DenseCsv => Self::DenseCsv,
            Format::CoordinateTriplet => Self::CoordinateTriplet,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// `noiseless`, `noisy:<nu>`, `near-low-rank`, or a JSON data-model file.
    #[arg(long, default_value = "noiseless")]
    data: String,
    /// `h1`..`h4`, `two-pattern`, `homogeneous:<p>`, or a JSON missingness file.
    #[arg(long, default_value = "h1")]
    missingness: String,
    /// Layout of observed.csv / observed.txt.
    #[arg(long, value_enum, default_value = "dense-csv")]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Primepca,
    Init,
    HardImpute,
    SoftImpute,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Partially observed matrix.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "dense-csv")]
    format: Format,
    #[arg(long, value_enum, default_value = "primepca")]
    method: Method,
    /// Number of principal components.
    #[arg(long, short = 'k')]
    rank: usize,
    #[arg(long, default_value_t = primepca::estimators::DEFAULT_N_ITER)]
    n_iter: usize,
    #[arg(long, default_value_t = primepca::estimators::DEFAULT_SIGMA_STAR)]
    sigma_star: f64,
    #[arg(long, default_value_t = primepca::estimators::DEFAULT_NOISY_KAPPA_STAR)]
    kappa_star: f64,
    /// Soft threshold for `soft-impute`.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// De-mean columns over their observed entries first.
    #[arg(long)]
    center: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// JSON experiment config.
    config: PathBuf,
    /// Override the number of repetitions.
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ScoresArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "dense-csv")]
    format: Format,
    /// Header-free d x K frame CSV.
    #[arg(long)]
    frame: PathBuf,
    #[arg(long)]
    center: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    first: PathBuf,
    second: PathBuf,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn runtime(e: impl std::fmt::Display) -> Self {
        Self::Runtime(e.to_string())
    }

    pub fn usage(e: impl std::fmt::Display) -> Self {
        Self::Usage(e.to_string())
    }
}

pub struct Globals {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let globals = Globals {
        seed: cli.seed,
        out: cli.out,
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&globals, a),
        Command::Fit(a) => commands::fit(&globals, a),
        Command::Bench(a) => commands::bench(&globals, a),
        Command::Scores(a) => commands::scores(&globals, a),
        Command::Eval(a) => commands::eval(&globals, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("Run `primepca --help` for usage.");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
