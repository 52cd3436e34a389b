//! Command-line front end: CSV ingestion, estimation, bootstrapping,
//! weight calibration, and simulation grids.

pub mod commands;
pub mod ingest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Exit-code contract: 0 success, 2 usage, 3 data, 4 numerical failure.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self {
            CliError::Usage(_) => "usage error",
            CliError::Data(_) => "data error",
            CliError::Numerical(_) => "numerical failure",
        };
        write!(f, "{kind}: {}", self.message())
    }
}

impl From<mixent::Error> for CliError {
    fn from(e: mixent::Error) -> Self {
        use mixent::Error::*;
        match e {
            Domain { .. } | InvalidConfig(_) | NoBracket { .. } => CliError::Usage(e.to_string()),
            EmptyInput(_) | DimensionMismatch { .. } | DegenerateData(_) | Serialization(_) => {
                CliError::Data(e.to_string())
            }
            NotPositiveDefinite | Collapsed | AllInitsFailed(_) | Bootstrap(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "mixent",
    version,
    about = "Gaussian-mixture entropy estimation with bootstrap uncertainty"
)]
pub struct Cli {
    /// Master seed; identical invocations produce identical outputs.
    #[arg(long, global = true, default_value_t = 20230816)]
    pub seed: u64,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a mixture by BIC and report entropy with analytic bounds.
    Estimate(EstimateArgs),
    /// Bootstrap the entropy estimate (bs | pb | wlb).
    Bootstrap(BootstrapArgs),
    /// Calibrate the Dirichlet weight concentration by root finding.
    Calibrate(CalibrateArgs),
    /// Run a simulation-study grid from a TOML config file.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Largest candidate component count.
    #[arg(long, default_value_t = 5)]
    pub g_max: usize,

    /// EM restarts per candidate.
    #[arg(long, default_value_t = 5)]
    pub n_init: usize,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Input CSV with a header row.
    pub input: PathBuf,

    /// Columns to analyze, comma separated (default: every numeric column).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,

    /// Analyze each value of this column as a separate group.
    #[arg(long)]
    pub group_by: Option<String>,

    /// Convert each selected price column to log-returns first.
    #[arg(long)]
    pub log_returns: bool,

    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    /// Input CSV with a header row.
    pub input: PathBuf,

    /// Columns to analyze, comma separated (default: every numeric column).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,

    /// Convert each selected price column to log-returns first.
    #[arg(long)]
    pub log_returns: bool,

    /// Resampling method: bs, pb, or wlb.
    #[arg(long, default_value = "wlb")]
    pub method: String,

    /// Dirichlet concentration for wlb.
    #[arg(long, default_value_t = 0.8137)]
    pub alpha: f64,

    /// Number of bootstrap replicates.
    #[arg(short = 'B', long = "replicates", default_value_t = 999)]
    pub n_boot: usize,

    /// Interval level.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,

    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Target expected median of rescaled weights.
    #[arg(long, default_value_t = 0.632_120_558_828_557_7)]
    pub target: f64,

    /// Bisection bracket: low high.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.5, 1.5])]
    pub bracket: Vec<f64>,

    /// Weight-vector length per Monte Carlo replicate.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    /// Monte Carlo replicates per objective evaluation.
    #[arg(long, default_value_t = 4000)]
    pub n_mc: usize,

    /// Alpha resolution.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Grid config (TOML): distributions, methods, alphas, sizes, n_reps,
    /// B, seed, levels.
    pub config: PathBuf,
}

/// Parse, configure the thread pool, and dispatch. Returns the process exit
/// code.
pub fn run(cli: Cli) -> u8 {
    if cli.threads > 0 {
        // Ignore failure: the global pool may already exist under tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let outcome = match &cli.command {
        Command::Estimate(args) => commands::cmd_estimate(&cli, args),
        Command::Bootstrap(args) => commands::cmd_bootstrap(&cli, args),
        Command::Calibrate(args) => commands::cmd_calibrate(&cli, args),
        Command::Simulate(args) => commands::cmd_simulate(&cli, args),
    };
    match outcome {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report is valid JSON"));
            0
        }
        Err(e) => {
            eprintln!("mixent: {e}");
            e.exit_code()
        }
    }
}
