//! Command-line driver for `headwayrl`.
//!
//! Every command stages its outputs in memory, then writes them together
//! with a `manifest.json` that can repeat the run byte for byte
//! (`headwayrl rerun out/manifest.json --out again/`).

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub mod commands;
pub mod config;
pub mod manifest;
pub mod variant;

use config::RunConfig;
use manifest::{Artifacts, RunManifest, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(
    name = "headwayrl",
    version,
    about = "Bus timetabling with a rule-constrained DQN and metaheuristic baselines"
)]
pub struct Cli {
    /// TOML run configuration; missing keys fall back to the built-in reference instance.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed for demand, training, search and resampling.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for independent jobs (0 = all cores). Does not change results.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Sample synthetic demand into `demand.csv`.
    GenData(GenDataArgs),
    /// Train a controller; writes checkpoint, reward curve, timetable, metrics and trace.
    Train(TrainArgs),
    /// Evaluate a timetable CSV or a checkpoint's greedy rollout.
    Eval(EvalArgs),
    /// Compare methods under peak shifts or demand resampling.
    Scenario(ScenarioArgs),
    /// Sweep ω or γ over repeated training runs.
    Sweep(SweepArgs),
    /// Train state/reward variants and tabulate their post-convergence statistics.
    Ablate(AblateArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenDataArgs {
    /// Override the number of passengers.
    #[arg(long)]
    pub passengers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Demand CSV (default: the configured demand).
    #[arg(long)]
    pub demand: Option<PathBuf>,
    /// Override the episode count.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// State/reward variant (`full`, `scheme-one`, `scheme-two`, `drop-feature:x4`, ...).
    #[arg(long, default_value = "full")]
    pub variant: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[group(skip)]
#[command(group(clap::ArgGroup::new("source").required(true).multiple(false)))]
pub struct EvalArgs {
    /// Timetable CSV (`depart_minute`).
    #[arg(long, group = "source")]
    pub timetable: Option<PathBuf>,
    /// Checkpoint whose greedy rollout is evaluated.
    #[arg(long, group = "source")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub demand: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// Move the configured peak window by each value (minutes).
    Shift,
    /// Resample demand at each rate.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dqn,
    Ga,
    Memetic,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScenarioArgs {
    #[arg(long, value_enum)]
    pub transform: Transform,
    /// Shift minutes or sampling rates (default: from the config).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<f64>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "dqn,ga,memetic"
    )]
    pub methods: Vec<Method>,
    /// Trained controller; without it the DQN is trained on the base demand.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Operator timetable CSV for the `manual` method.
    #[arg(long)]
    pub manual: Option<PathBuf>,
    #[arg(long)]
    pub demand: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Omega,
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Values such as `0,1/5000,1/500` (default: from the config).
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<String>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub demand: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AblateArgs {
    /// Variants to train (default: from the config).
    #[arg(long = "variant", value_delimiter = ',')]
    pub variants: Vec<String>,
    #[arg(long)]
    pub demand: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> anyhow::Result<RunManifest> {
    if let Command::Rerun(args) = &cli.command {
        let recorded = RunManifest::load(&args.manifest)?;
        recorded.check_inputs()?;
        return execute(&recorded.command, recorded.config, &cli.out, cli.jobs);
    }
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    execute(&cli.command, config.resolved(cli.seed)?, &cli.out, cli.jobs)
}

/// Runs `command` under a resolved config and writes outputs plus manifest into `out`.
pub fn execute(
    command: &Command,
    config: RunConfig,
    out: &Path,
    jobs: Option<usize>,
) -> anyhow::Result<RunManifest> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("building the worker pool")?;
    let mut ctx = commands::Context::new(config);
    let mut artifacts = pool.install(|| commands::dispatch(command, &mut ctx))?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.clone(),
        seed: ctx.config.seed,
        config: ctx.config,
        inputs: ctx.inputs,
        outputs: artifacts.digests(),
    };
    artifacts.add_json(MANIFEST_FILE, &manifest)?;
    let written = artifacts.write_all(out)?;
    log::info!("wrote {} files to {}", written.len(), out.display());
    Ok(manifest)
}

/// Artifacts a command would write, without touching the filesystem.
pub fn stage(command: &Command, config: RunConfig) -> anyhow::Result<Artifacts> {
    let mut ctx = commands::Context::new(config);
    commands::dispatch(command, &mut ctx)
}
