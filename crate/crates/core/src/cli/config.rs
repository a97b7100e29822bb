use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::detect::{Algorithm, AnnealingSchedule};
use crate::ingest::SignalKind;

pub const DEFAULT_RESTARTS: usize = 1000;
pub const DEFAULT_WIDTH: usize = 600;
pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Weighted,
    Binary,
    Both,
}

impl Representation {
    pub fn kinds(self) -> Vec<SignalKind> {
        match self {
            Representation::Weighted => vec![SignalKind::Weighted],
            Representation::Binary => vec![SignalKind::Binary],
            Representation::Both => vec![SignalKind::Weighted, SignalKind::Binary],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmChoice {
    Louvain,
    Potts,
    Spectral,
    All,
}

impl AlgorithmChoice {
    pub fn algorithms(self) -> Vec<Algorithm> {
        match self {
            AlgorithmChoice::Louvain => vec![Algorithm::Louvain],
            AlgorithmChoice::Potts => vec![Algorithm::Potts],
            AlgorithmChoice::Spectral => vec![Algorithm::Spectral],
            AlgorithmChoice::All => Algorithm::ALL.to_vec(),
        }
    }
}

/// Flags shared by the analysis subcommands. Every field is optional so that
/// a config file can fill in what the command line leaves out.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    /// Key-value (TOML) file with defaults for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Price CSV: `date,LABEL1,...,LABELN`.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    /// Sector CSV: `label,sector`.
    #[arg(long)]
    pub sectors: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub representation: Option<Representation>,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmChoice>,
    /// Restarts per seeded algorithm (default 1000).
    #[arg(long)]
    pub restarts: Option<usize>,
    /// First seed; restart k uses seed + k.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sliding window width in time steps (default 600).
    #[arg(long)]
    pub width: Option<usize>,
    /// Sliding window stride (default 1).
    #[arg(long)]
    pub stride: Option<usize>,
    /// Histogram bins (default 50).
    #[arg(long)]
    pub bins: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Potts starting temperature (default N · mean |C_group|).
    #[arg(long)]
    pub initial_temperature: Option<f64>,
    /// Potts geometric cooling ratio (default 0.995).
    #[arg(long)]
    pub cooling_ratio: Option<f64>,
    /// Potts proposals per level as a multiple of N (default 10).
    #[arg(long)]
    pub moves_per_node: Option<usize>,
    /// Potts stops below this acceptance rate (default 0.01).
    #[arg(long)]
    pub min_acceptance: Option<f64>,
    /// Potts stops below this temperature (default 1e-6).
    #[arg(long)]
    pub floor_temperature: Option<f64>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        RunArgs { config: None, $($field: $flags.$field.clone().or($file.$field.clone()),)* }
    };
}

impl RunArgs {
    /// Command-line values take precedence over the config file.
    pub fn merged(&self) -> anyhow::Result<RunArgs> {
        let file = match &self.config {
            Some(path) => read_config_file(path)?,
            None => RunArgs::default(),
        };
        Ok(overlay!(
            self,
            file,
            prices,
            sectors,
            representation,
            algorithm,
            restarts,
            seed,
            width,
            stride,
            bins,
            threads,
            out_dir,
            initial_temperature,
            cooling_ratio,
            moves_per_node,
            min_acceptance,
            floor_temperature
        ))
    }
}

fn read_config_file(path: &Path) -> anyhow::Result<RunArgs> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub prices: PathBuf,
    pub sectors: Option<PathBuf>,
    pub representation: Representation,
    pub algorithms: Vec<Algorithm>,
    pub restarts: usize,
    pub seed: u64,
    pub width: usize,
    pub stride: usize,
    pub bins: usize,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
    pub schedule: AnnealingSchedule,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> anyhow::Result<Self> {
        let args = args.merged()?;
        let Some(prices) = args.prices.clone() else {
            bail!("--prices is required (flag or config file)");
        };
        let defaults = AnnealingSchedule::default();
        let config = RunConfig {
            prices,
            sectors: args.sectors.clone(),
            representation: args.representation.unwrap_or(Representation::Both),
            algorithms: args.algorithm.unwrap_or(AlgorithmChoice::All).algorithms(),
            restarts: args.restarts.unwrap_or(DEFAULT_RESTARTS),
            seed: args.seed.unwrap_or(0),
            width: args.width.unwrap_or(DEFAULT_WIDTH),
            stride: args.stride.unwrap_or(1),
            bins: args.bins.unwrap_or(DEFAULT_BINS),
            threads: args.threads,
            out_dir: args.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
            schedule: AnnealingSchedule {
                initial_temperature: args.initial_temperature.or(defaults.initial_temperature),
                cooling_ratio: args.cooling_ratio.unwrap_or(defaults.cooling_ratio),
                moves_per_node: args.moves_per_node.unwrap_or(defaults.moves_per_node),
                min_acceptance: args.min_acceptance.unwrap_or(defaults.min_acceptance),
                floor_temperature: args.floor_temperature.unwrap_or(defaults.floor_temperature),
            },
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.restarts == 0 {
            bail!("restarts must be at least 1");
        }
        if self.width < 2 {
            bail!("window width must be at least 2");
        }
        if self.stride == 0 {
            bail!("stride must be at least 1");
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        self.schedule.validate()?;
        Ok(())
    }

    /// Restarts actually executed for `algorithm`.
    pub fn restarts_for(&self, algorithm: Algorithm) -> usize {
        if algorithm.is_seeded() {
            self.restarts
        } else {
            1
        }
    }
}
