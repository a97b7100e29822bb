//! The `corrcomm` command line.
//!
//! Each subcommand writes its reports into an output directory together
//! with a `manifest.json` that records the resolved configuration, seeds and
//! conventions used.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_detect, cmd_shuffle, cmd_sliding, cmd_spectrum, read_partition_csv};
pub use config::{AlgorithmChoice, Representation, RunArgs, RunConfig};
pub use output::{Conventions, Manifest, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "corrcomm",
    version,
    about = "Community detection in correlated time series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a planted-community price panel.
    Synth(SynthArgs),
    /// Write log-returns of a price panel.
    Returns(ConvertArgs),
    /// Write the sign (+1, 0, -1) of each log-return.
    Binarize(ConvertArgs),
    /// Write the Pearson correlation matrix.
    Corr(CorrArgs),
    /// Eigenvalue histogram against the Marchenko-Pastur curve.
    Spectrum(RunArgs),
    /// Spectra before and after shuffling every series in time.
    Shuffle(RunArgs),
    /// Detect communities and compare representations.
    Detect(RunArgs),
    /// Binary-vs-weighted VI over sliding windows.
    Sliding(RunArgs),
    /// Compare two partition files.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Block sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "20,20,20")]
    pub blocks: Vec<usize>,
    /// Intra-block loading, one value or one per block.
    #[arg(long, value_delimiter = ',', default_value = "0.45")]
    pub intra: Vec<f64>,
    /// Market loading.
    #[arg(long, default_value_t = 0.5)]
    pub market: f64,
    /// Number of returns per series.
    #[arg(long, default_value_t = 6000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scale of the generated log-returns.
    #[arg(long, default_value_t = 0.01)]
    pub volatility: f64,
    /// Price CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional `label,community` CSV of the planted partition.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrArgs {
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long, value_enum, default_value = "weighted")]
    pub representation: Representation,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// First `label,community` CSV.
    #[arg(long)]
    pub first: PathBuf,
    /// Second `label,community` CSV.
    #[arg(long)]
    pub second: PathBuf,
    /// Report JSON to write (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(args) => commands::cmd_synth(&args),
        Command::Returns(args) => commands::cmd_convert(&args, false),
        Command::Binarize(args) => commands::cmd_convert(&args, true),
        Command::Corr(args) => commands::cmd_corr(&args),
        Command::Spectrum(args) => with_pool(&args, cmd_spectrum),
        Command::Shuffle(args) => with_pool(&args, cmd_shuffle),
        Command::Detect(args) => with_pool(&args, |cfg| cmd_detect(cfg).map(|_| ())),
        Command::Sliding(args) => with_pool(&args, |cfg| cmd_sliding(cfg).map(|_| ())),
        Command::Compare(args) => commands::cmd_compare(&args),
    }
}

fn with_pool(
    args: &RunArgs,
    f: impl FnOnce(&RunConfig) -> anyhow::Result<()> + Send,
) -> anyhow::Result<()> {
    let config = RunConfig::resolve(args)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        pool = pool.num_threads(n);
    }
    pool.build()?.install(|| f(&config))
}
