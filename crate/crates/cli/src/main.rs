use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use jmf::predict::PredictConfig;
use jmf::synthgen::{DatasetId, SyntheticSpec};
use jmf::Algorithm;
use jmf_cli::commands::{generate_cmd, gridsearch_cmd, predict_cmd, solve_cmd, PredictArgs, PredictMode};
use jmf_cli::config::{ExperimentConfig, ParamGrid};

#[derive(Parser)]
#[command(
    name = "jmf",
    version,
    about = "Joint nonnegative matrix factorization with network constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (data, planted factors, constraints) as CSV.
    Generate {
        /// D1, D2, D3 or D4.
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Data noise level; defaults to the dataset's own.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every configured solver on every seed and write a benchmark summary.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated seeds, replacing the config's list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Run on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Pick regularization weights by mean AUC over the config's seeds.
    Gridsearch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Use the full built-in grid instead of the config's.
        #[arg(long)]
        full_grid: bool,
        #[arg(long)]
        serial: bool,
    },
    /// Apply a trained model (a run's model.json) to new data.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        mode: PredictMode,
        /// `VIEW=PATH` with a 1-based view index; repeatable.
        #[arg(long = "input", required = true)]
        inputs: Vec<String>,
        /// Held-out view to reconstruct (l-view), 1-based.
        #[arg(long)]
        target: Option<usize>,
        /// Single-column CSV of 1-based class ids (l-class).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// True matrix of the held-out view (l-view).
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Overrides the model's training algorithm.
        #[arg(long)]
        algorithm: Option<Algorithm>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn one_based(v: usize) -> Result<usize> {
    if v == 0 {
        bail!("view indices are 1-based");
    }
    Ok(v - 1)
}

fn load_config(path: &std::path::Path, seeds: Option<Vec<u64>>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate {
            dataset,
            seed,
            noise,
            out,
        } => {
            let id: DatasetId = dataset.parse()?;
            let mut spec = SyntheticSpec::new(id, seed);
            if let Some(mu) = noise {
                spec = spec.with_noise(mu);
            }
            generate_cmd(&spec, &out)
        }
        Command::Solve {
            config,
            out,
            seeds,
            serial,
        } => solve_cmd(&load_config(&config, seeds)?, &out, serial),
        Command::Gridsearch {
            config,
            out,
            seeds,
            full_grid,
            serial,
        } => {
            let cfg = load_config(&config, seeds)?;
            let grid = full_grid.then(ParamGrid::full);
            gridsearch_cmd(&cfg, grid.as_ref(), &out, serial)
        }
        Command::Predict {
            model,
            mode,
            inputs,
            target,
            labels,
            truth,
            algorithm,
            out,
        } => {
            let inputs = inputs
                .iter()
                .map(|s| {
                    let (v, p) = s
                        .split_once('=')
                        .with_context(|| format!("--input {s:?} is not VIEW=PATH"))?;
                    let v: usize = v.parse().with_context(|| format!("bad view index in {s:?}"))?;
                    Ok((one_based(v)?, PathBuf::from(p)))
                })
                .collect::<Result<Vec<_>>>()?;
            let args = PredictArgs {
                model,
                mode,
                inputs,
                target: target.map(one_based).transpose()?,
                labels,
                truth,
                out,
                config: PredictConfig {
                    algorithm,
                    ..PredictConfig::default()
                },
            };
            predict_cmd(&args)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("every run diverged");
            ExitCode::from(1)
        }
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
