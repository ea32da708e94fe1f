use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use ia_manifold::harness::config::{parse_algorithms, parse_snr_list};
use ia_manifold::harness::{run_experiment, ExperimentConfig, ExperimentKind};

/// Monte-Carlo interference-alignment experiments with CSV output.
#[derive(Debug, Parser)]
#[command(name = "ia-sim", version)]
struct Cli {
    /// Flat `key = value` config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// convergence, rate or angle.
    #[arg(long, default_value = "convergence")]
    experiment: ExperimentKind,
    /// Comma list of euclidean, stiefel, grassmann.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Maximum sweeps per run.
    #[arg(long)]
    iters: Option<usize>,
    /// Relative stopping tolerance on cost / initial cost.
    #[arg(long)]
    tol: Option<f64>,
    /// SNR grid in dB: `start:stop:step` or a comma list.
    #[arg(long)]
    snr: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(algo) = &cli.algo {
        cfg.algorithms = parse_algorithms(algo)?;
    }
    if let Some(seeds) = cli.seeds {
        cfg.seeds = seeds;
    }
    if let Some(seed) = cli.master_seed {
        cfg.master_seed = seed;
    }
    if let Some(iters) = cli.iters {
        cfg.stop.max_iterations = iters;
    }
    if let Some(tol) = cli.tol {
        cfg.stop.relative_tolerance = tol;
    }
    if let Some(snr) = &cli.snr {
        cfg.snr_db_list = parse_snr_list(snr)?;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    let files = run_experiment(cli.experiment, &cfg)
        .with_context(|| format!("{} experiment failed", cli.experiment.name()))?;
    for file in files {
        println!("{}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
