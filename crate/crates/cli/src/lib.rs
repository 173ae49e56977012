//! The `scamlens` command line: argument parsing, configuration and the
//! per-stage commands that write report directories.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use config::{Overrides, PipelineConfig};

/// Invalid configuration or usage. Maps to exit status 2; every other
/// failure maps to 3.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() {
        EXIT_CONFIG
    } else {
        EXIT_FAILURE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "scamlens", version, about = "Forensics pipeline for arbitrage-bot smart contract scams")]
pub struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true, env = "SCAMLENS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output root; each command writes into its own subdirectory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for classifier training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format for tabular reports.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify videos, extract URLs and tag keywords.
    Triage(TriageArgs),
    /// Recover hard-coded recipient addresses from a contract corpus.
    Extract(ExtractArgs),
    /// Grow a seed set of scam addresses through similar deployed contracts.
    Expand(ExpandArgs),
    /// Filter victim transactions and aggregate losses.
    Victims(VictimsArgs),
    /// Group scam addresses into entities.
    Cluster(ClusterArgs),
    /// Run every configured stage in order.
    ReportAll,
    /// Merge chain fixtures into one canonical fixture directory.
    Snapshot(SnapshotArgs),
}

#[derive(Debug, Args)]
pub struct TriageArgs {
    /// Video metadata (JSON lines).
    #[arg(long)]
    pub videos: Option<PathBuf>,
    /// Trained model; takes precedence over training.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Labeled video metadata to train a model from.
    #[arg(long)]
    pub training: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Directory of `.sol` files.
    #[arg(long)]
    pub contracts: Option<PathBuf>,
    /// Import snapshot directory.
    #[arg(long)]
    pub imports: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Chain fixture directory; repeatable.
    #[arg(long = "chain")]
    pub chains: Vec<PathBuf>,
    /// Contract corpus used for the signature catalog.
    #[arg(long)]
    pub contracts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Seed addresses, one per line.
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct VictimsArgs {
    /// Scam addresses, one per line.
    #[arg(long)]
    pub scam_addresses: Option<PathBuf>,
    /// Daily closing prices (CSV).
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Scam profiles (JSON lines).
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    /// Chain fixture directories to merge; defaults to the configured chains.
    #[arg(long = "chain")]
    pub chains: Vec<PathBuf>,
    /// Destination directory.
    #[arg(long)]
    pub dest: PathBuf,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        let mut o = Overrides {
            out_dir: self.out.clone(),
            jobs: self.jobs,
            seed: self.seed,
            format: self.format,
            ..Overrides::default()
        };
        let chain = |o: &mut Overrides, c: &ChainArgs| {
            o.chains = c.chains.clone();
            o.contracts = c.contracts.clone();
        };
        match &self.command {
            Command::Triage(a) => {
                o.videos = a.videos.clone();
                o.model = a.model.clone();
                o.training = a.training.clone();
            }
            Command::Extract(a) => {
                o.contracts = a.contracts.clone();
                o.imports = a.imports.clone();
            }
            Command::Expand(a) => {
                o.seeds = a.seeds.clone();
                chain(&mut o, &a.chain);
            }
            Command::Victims(a) => {
                o.scam_addresses = a.scam_addresses.clone();
                o.prices = a.prices.clone();
                chain(&mut o, &a.chain);
            }
            Command::Cluster(a) => {
                o.profiles = a.profiles.clone();
                chain(&mut o, &a.chain);
            }
            Command::Snapshot(a) => o.chains = a.chains.clone(),
            Command::ReportAll => {}
        }
        o
    }
}

/// Loads configuration, sizes the thread pool and runs the command.
pub fn run(cli: Cli) -> Result<()> {
    let cfg = PipelineConfig::load(cli.config.as_deref(), cli.overrides())?;
    if let Some(n) = cfg.jobs {
        // Fails only if a pool already exists, e.g. when embedded in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let summary = match &cli.command {
        Command::Triage(_) => commands::triage::run(&cfg)?.summary(),
        Command::Extract(_) => commands::extract::run(&cfg)?.summary(),
        Command::Expand(_) => commands::expand::run(&cfg)?.summary(),
        Command::Victims(_) => commands::victims::run(&cfg)?.summary(),
        Command::Cluster(_) => commands::cluster::run(&cfg)?.summary(),
        Command::ReportAll => commands::report_all(&cfg)?,
        Command::Snapshot(a) => commands::snapshot::run(&cfg, &a.dest)?,
    };
    println!("{summary}");
    Ok(())
}
