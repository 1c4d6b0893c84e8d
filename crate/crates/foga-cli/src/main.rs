//! Command-line front end for the foga autotuner.
//!
//! Exit codes: 0 success, 2 usage, 3 invalid configuration or document,
//! 4 baseline measurement failure, 5 internal error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "foga",
    version,
    about = "Genetic-algorithm autotuner for compiler optimization flags"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search a flag catalog for the fastest configuration.
    Tune(TuneArgs),
    /// Measure named configurations side by side under one protocol.
    Compare(CompareArgs),
    /// Rank each catalog flag by its one-hot speedup contribution.
    Importance(ImportanceArgs),
    /// Search the engine's own parameter space for a better configuration.
    MetaTune(MetaTuneArgs),
    /// Print fitness-over-time columns from a run report.
    Convergence(ConvergenceArgs),
}

/// How fitness is measured: a real compiler driven as a subprocess, or a
/// runtime-model document evaluated in process.
#[derive(Args)]
struct BackendArgs {
    /// Compiler executable to drive (for example: gcc).
    #[arg(long, conflicts_with = "mock_model")]
    compiler: Option<String>,

    /// Runtime-model document standing in for a compiler.
    #[arg(long, value_name = "FILE")]
    mock_model: Option<PathBuf>,

    /// Source file to compile; repeat for multiple files.
    #[arg(long = "source", value_name = "FILE")]
    sources: Vec<PathBuf>,

    /// Fixed compile argument placed before the searched flags; repeatable.
    #[arg(long = "compile-arg", value_name = "ARG", allow_hyphen_values = true)]
    compile_args: Vec<String>,

    /// Token of the run command; {binary} and {N} expand. Repeatable, in
    /// order. Default runs the binary bare.
    #[arg(long = "run-arg", value_name = "ARG", allow_hyphen_values = true)]
    run_args: Vec<String>,

    /// Measurement protocol document (runs, timeouts, aggregator).
    #[arg(long, value_name = "FILE")]
    protocol: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    backend: BackendArgs,

    /// Flag catalog document.
    #[arg(long, value_name = "FILE")]
    catalog: PathBuf,

    /// Engine configuration document; defaults to the tuned values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Stopping policy document; defaults to 45 stale generations.
    #[arg(long, value_name = "FILE")]
    stopping: Option<PathBuf>,

    /// Workload size substituted for {N} in the run command.
    #[arg(long, value_name = "N")]
    workload_n: Option<u64>,

    /// Overrides the configuration's RNG seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Predefined levels to measure as baselines, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "LEVELS")]
    levels: Vec<String>,

    /// Evaluation log path; defaults to the report path with a
    /// .evals.jsonl extension (subprocess runs only).
    #[arg(long, value_name = "FILE")]
    eval_log: Option<PathBuf>,

    /// Where to write the run report.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    backend: BackendArgs,

    /// Flag catalog document (defines what the mock model's flags mean).
    #[arg(long, value_name = "FILE")]
    catalog: PathBuf,

    /// Predefined levels to measure, comma separated (e.g. O1,O2,O3).
    #[arg(long, value_delimiter = ',', value_name = "LEVELS")]
    levels: Vec<String>,

    /// Named external configuration as LABEL=FILE, where FILE holds
    /// whitespace-separated compiler arguments; repeatable.
    #[arg(long = "external", value_name = "LABEL=FILE")]
    external: Vec<String>,

    /// Run report whose best flag assignment joins the comparison as FOGA.
    #[arg(long, value_name = "FILE")]
    foga_report: Option<PathBuf>,

    /// Workload sizes to sweep, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "SIZES")]
    workloads: Vec<u64>,

    /// Where to write the comparison document.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct ImportanceArgs {
    #[command(flatten)]
    backend: BackendArgs,

    /// Flag catalog document.
    #[arg(long, value_name = "FILE")]
    catalog: PathBuf,

    /// Arguments every measurement starts from, as one space-separated
    /// string (for example: "-O1").
    #[arg(long, value_name = "ARGS", default_value = "", allow_hyphen_values = true)]
    baseline_args: String,

    /// Flags named individually in the rendered table; the rest fold into
    /// a residual row.
    #[arg(long, default_value_t = 5)]
    top_k: usize,

    /// Where to write the importance document.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct MetaTuneArgs {
    #[command(flatten)]
    backend: BackendArgs,

    /// Flag catalog document for the inner search problem.
    #[arg(long, value_name = "FILE")]
    catalog: PathBuf,

    /// Total configurations to try.
    #[arg(long)]
    budget: usize,

    /// Engine runs averaged per configuration; the same seeds are reused
    /// across every trial.
    #[arg(long, default_value_t = 3)]
    seeds_per_trial: usize,

    /// Seed for the meta-level search itself.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Workload size substituted for {N} in the run command.
    #[arg(long, value_name = "N")]
    workload_n: Option<u64>,

    /// Parameter space document; defaults to the full menu and ranges.
    #[arg(long, value_name = "FILE")]
    space: Option<PathBuf>,

    /// Where to write the winning engine configuration (loadable via
    /// tune --config).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Where to write the winning stopping policy (loadable via
    /// tune --stopping); defaults next to --out.
    #[arg(long, value_name = "FILE")]
    stopping_out: Option<PathBuf>,

    /// Trial-by-trial log, one JSON object per line; defaults next to
    /// --out.
    #[arg(long, value_name = "FILE")]
    trials_log: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    /// Run report to read.
    #[arg(long, value_name = "FILE")]
    report: PathBuf,
}

/// Failures carrying their process exit code.
enum CliError {
    Usage(String),
    Config(String),
    Baseline(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Baseline(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Config(m)
            | CliError::Baseline(m)
            | CliError::Internal(m) => m,
        }
    }
}

impl From<foga::Error> for CliError {
    fn from(e: foga::Error) -> Self {
        use foga::Error::*;
        match e {
            BaselineFailure(_) => CliError::Baseline(e.to_string()),
            Io(_) => CliError::Internal(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tune(args) => commands::tune(args),
        Command::Compare(args) => commands::compare(args),
        Command::Importance(args) => commands::importance(args),
        Command::MetaTune(args) => commands::meta_tune(args),
        Command::Convergence(args) => commands::convergence(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("foga: error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
