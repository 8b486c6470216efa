//! `axmul`: sweeps, accuracy tables, cluster maps, histograms and per-cluster
//! design selection for approximate array multipliers.

use std::path::PathBuf;
use std::process::ExitCode;

use axmul_core::cluster::{DEFAULT_CLUSTER_SIZE, DEFAULT_NED_THRESHOLD, DEFAULT_PSNR_THRESHOLD};
use axmul_core::fabric::Architecture;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::{CliError, Degree};

#[derive(Debug, Parser)]
#[command(name = "axmul", version, about = "Error analysis of approximate array multipliers")]
struct Cli {
    #[command(flatten)]
    run: RunArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an adder-library file and print each adder's erroneous rows.
    Validate {
        /// Library file; defaults to --library.
        path: Option<PathBuf>,
    },
    /// Exhaustive sweep of one design.
    Sweep,
    /// Accuracy table of the 20-design library.
    Table,
    /// Per-cluster NED and PSNR of one design.
    Clusters,
    /// Error-distance histogram of one design.
    Histogram {
        /// Bin width; about 64 bins by default.
        #[arg(long)]
        bin_width: Option<u64>,
    },
    /// Pick the most approximate qualifying design for every cluster.
    Select {
        #[arg(long, value_enum, default_value_t = Metric::Ned)]
        metric: Metric,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Ned,
    Psnr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
    /// Whitespace-separated matrices.
    Txt,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Adder-library document (JSON list of truth tables).
    #[arg(long, env = "AXMUL_LIBRARY", global = true)]
    library: Option<PathBuf>,

    /// Operand width in bits.
    #[arg(long, default_value_t = 8, global = true)]
    width: u32,

    /// Adder type, e.g. AMA1 or exact.
    #[arg(long = "type", global = true)]
    adder_type: Option<String>,

    /// D1..D4 or a number of approximated result bits.
    #[arg(long, global = true)]
    degree: Option<Degree>,

    /// Library design ordinals (1..20).
    #[arg(long, value_delimiter = ',', global = true)]
    design: Vec<u32>,

    #[arg(long, default_value = "ripple-carry", global = true)]
    arch: Architecture,

    #[arg(long, default_value_t = DEFAULT_CLUSTER_SIZE, global = true)]
    cluster_size: u64,

    /// Cluster NED threshold as a fraction (1.0 = 100%).
    #[arg(long, default_value_t = DEFAULT_NED_THRESHOLD, global = true)]
    ned_threshold: f64,

    /// Cluster PSNR threshold in dB.
    #[arg(long, default_value_t = DEFAULT_PSNR_THRESHOLD, global = true)]
    psnr_threshold: f64,

    /// Output directory.
    #[arg(long, default_value = ".", global = true)]
    out: PathBuf,

    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Csv, Format::Json, Format::Svg, Format::Txt], global = true)]
    format: Vec<Format>,

    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let run = &cli.run;
    if [run.ned_threshold, run.psnr_threshold].iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(CliError::usage("thresholds must be non-negative numbers"));
    }
    if let Some(k) = run.workers {
        if k == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::internal(e.to_string()))?;
    }
    match cli.command {
        Command::Validate { path } => commands::validate(path.as_ref().or(run.library.as_ref())),
        Command::Sweep => commands::sweep(run),
        Command::Table => commands::table(run),
        Command::Clusters => commands::clusters(run),
        Command::Histogram { bin_width } => commands::histogram(run, bin_width),
        Command::Select { metric } => commands::select(run, metric),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
