use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use avs_core::avs2d::ObservationModel;
use avs_core::harness::{run_experiment, write_csv, ExperimentConfig, Policy, Stage};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "avs", version, about = "POMCP active visual search experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment matrix and write the summary CSV.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// `key = value` config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path, or `-` for stdout.
    #[arg(long)]
    out: PathBuf,
    /// Simulation counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    sims: Option<Vec<usize>>,
    /// Particle counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    particles: Option<Vec<usize>>,
    #[arg(long)]
    episodes: Option<usize>,
    /// First episode seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run a single policy instead of the configured list.
    #[arg(long, value_parser = parse_policy)]
    policy: Option<Policy>,
    #[arg(long, value_parser = parse_obs)]
    obs: Option<ObservationModel>,
    #[arg(long, value_parser = parse_stage)]
    stage: Option<Stage>,
    /// ASCII map file (`.`, `#`, `X`, `O`, `A`).
    #[arg(long)]
    map: Option<PathBuf>,
    /// Border-cell noise probability.
    #[arg(long)]
    noise: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write 0 in the time column so the CSV is reproducible byte for byte.
    #[arg(long)]
    no_time: bool,
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse().map_err(|e: avs_core::AvsError| e.to_string())
}

fn parse_obs(s: &str) -> Result<ObservationModel, String> {
    s.parse().map_err(|e: avs_core::AvsError| e.to_string())
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse().map_err(|e: avs_core::AvsError| e.to_string())
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &args.sims {
        cfg.n_sims = v.clone();
    }
    if let Some(v) = &args.particles {
        cfg.particles = v.clone();
    }
    if let Some(v) = args.episodes {
        cfg.episodes = v;
    }
    if let Some(v) = args.seed {
        cfg.seed_base = v;
    }
    if let Some(v) = args.policy {
        cfg.policies = vec![v];
    }
    if let Some(v) = args.obs {
        cfg.obs_model = v;
    }
    if let Some(v) = args.stage {
        cfg.stage = v;
    }
    if let Some(path) = &args.map {
        cfg.set_map_file(path)?;
    }
    if let Some(v) = args.noise {
        cfg.p_noise = v;
    }
    if let Some(v) = args.threads {
        cfg.threads = (v > 0).then_some(v);
    }
    if args.no_time {
        cfg.record_time = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = build_config(&args)?;
    let rows = run_experiment(&cfg)?;
    let out: Box<dyn Write> = if args.out.as_os_str() == "-" {
        Box::new(io::stdout().lock())
    } else {
        let f = File::create(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
        Box::new(BufWriter::new(f))
    };
    write_csv(&rows, cfg.record_time, out).context("writing CSV")?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
    }
}
