//! Runs every (solver, seed) pair, optionally in parallel, and aggregates
//! the results into benchmark rows.

use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use jmf::evaluate::evaluate;
use jmf::model::init_factors;
use jmf::synthgen::{generate, GroundTruth};
use jmf::{
    solve, Algorithm, ConstraintSet, Factorization, Hyperparameters, JmfError, MultiViewDataset, Problem, SolverConfig,
    SolverReport, StopRule, Termination,
};

use crate::config::{ExperimentConfig, Source, Weights};
use crate::io::Manifest;

/// Data for one seed.
pub struct Instance {
    pub dataset: MultiViewDataset,
    pub constraints: ConstraintSet,
    pub truth: Option<GroundTruth>,
    pub rank: Option<usize>,
}

impl Instance {
    fn from_truth(gt: GroundTruth) -> Self {
        Self {
            dataset: gt.dataset(),
            constraints: gt.constraints.clone(),
            rank: Some(gt.rank()),
            truth: Some(gt),
        }
    }
}

/// One instance per seed for synthetic sources, a single shared one for
/// manifests.
pub fn load_instances(cfg: &ExperimentConfig) -> Result<Vec<Instance>> {
    match &cfg.source {
        Source::Synthetic(spec) => cfg
            .seeds
            .iter()
            .map(|&seed| {
                let mut spec = spec.clone();
                spec.seed = seed;
                Ok(Instance::from_truth(generate(&spec)?))
            })
            .collect(),
        Source::Manifest(path) => {
            let (m, dir) = Manifest::load(path)?;
            let inst = match m.ground_truth(&dir)? {
                Some(gt) => Instance::from_truth(gt),
                None => {
                    let dataset = m.dataset(&dir)?;
                    let constraints = m.constraints(&dir, dataset.num_views())?;
                    Instance {
                        dataset,
                        constraints,
                        truth: None,
                        rank: None,
                    }
                }
            };
            Ok(vec![inst])
        }
    }
}

pub fn instance_for(instances: &[Instance], seed_index: usize) -> &Instance {
    &instances[seed_index.min(instances.len() - 1)]
}

pub fn build_problem(cfg: &ExperimentConfig, inst: &Instance, weights: Weights) -> Result<Problem> {
    let rank = cfg
        .rank
        .or(inst.rank)
        .context("rank is required when the source has no planted factors")?;
    let params: Hyperparameters = cfg.hyperparameters(rank, weights);
    let constraints = if cfg.constrained {
        inst.constraints.clone()
    } else {
        ConstraintSet::empty(inst.dataset.num_views())
    };
    Ok(Problem::new(inst.dataset.clone(), constraints, params)?)
}

pub struct RunResult {
    pub solver: usize,
    pub seed: u64,
    pub outcome: std::result::Result<Finished, usize>,
}

pub struct Finished {
    pub factors: Factorization,
    pub report: SolverReport,
    pub seconds: f64,
    pub auc: Option<f64>,
}

/// Runs the solve; wall time covers the solve only. Divergence is returned
/// as `Err(iteration)`.
pub fn run_one(
    problem: &Problem,
    config: &SolverConfig,
    truth: Option<&GroundTruth>,
) -> Result<std::result::Result<Finished, usize>> {
    let init = init_factors(problem, config.seed);
    let start = Instant::now();
    let solved = solve(problem, config, init);
    let seconds = start.elapsed().as_secs_f64();
    let (factors, report) = match solved {
        Ok(out) => out,
        Err(JmfError::Diverged { iteration }) => return Ok(Err(iteration)),
        Err(e) => return Err(e.into()),
    };
    let auc = match truth {
        Some(gt) if gt.w0.ncols() == factors.rank() => Some(evaluate(&factors, gt)?.auc),
        _ => None,
    };
    Ok(Ok(Finished {
        factors,
        report,
        seconds,
        auc,
    }))
}

/// Worker count: 1 when serial, else `min(cores, runs)` further capped by
/// `JMF_THREADS`.
pub fn thread_count(serial: bool, runs: usize) -> usize {
    if serial {
        return 1;
    }
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cap = std::env::var("JMF_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    let n = cores.min(runs.max(1));
    cap.map_or(n, |c| n.min(c))
}

/// One solve: weights, index into `cfg.solvers`, index into `cfg.seeds`.
#[derive(Debug, Clone, Copy)]
pub struct Job {
    pub weights: Weights,
    pub solver: usize,
    pub seed_index: usize,
}

pub fn run_jobs(cfg: &ExperimentConfig, instances: &[Instance], jobs: &[Job], serial: bool) -> Result<Vec<RunResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(serial, jobs.len()))
        .build()?;
    pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let seed = cfg.seeds[job.seed_index];
                let inst = instance_for(instances, job.seed_index);
                let problem = build_problem(cfg, inst, job.weights)?;
                let config = SolverConfig {
                    seed,
                    ..cfg.solvers[job.solver]
                };
                let outcome = run_one(&problem, &config, inst.truth.as_ref())?;
                if let Err(it) = &outcome {
                    log::warn!("{} seed {seed} diverged at iteration {it}", config.algorithm);
                }
                Ok(RunResult {
                    solver: job.solver,
                    seed,
                    outcome,
                })
            })
            .collect()
    })
}

/// Every solver against every seed at the configured weights.
pub fn run_all(cfg: &ExperimentConfig, instances: &[Instance], serial: bool) -> Result<Vec<RunResult>> {
    let jobs: Vec<Job> = (0..cfg.solvers.len())
        .flat_map(|solver| {
            (0..cfg.seeds.len()).map(move |seed_index| Job {
                weights: cfg.weights,
                solver,
                seed_index,
            })
        })
        .collect();
    run_jobs(cfg, instances, &jobs, serial)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub algorithm: Algorithm,
    pub stop_rule: StopRule,
    pub tolerance: f64,
    pub runs: usize,
    pub mean_seconds: f64,
    pub mean_iterations: f64,
    pub mean_reconstruction_error: f64,
    /// Absent without ground truth.
    pub mean_auc: Option<f64>,
    pub diverged: usize,
    pub cap_exceeded: usize,
    /// Final objective of every finished run, in seed order.
    pub final_objectives: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// One row per solver config; means over the runs that did not diverge.
pub fn summarize(cfg: &ExperimentConfig, results: &[RunResult]) -> Vec<BenchmarkRow> {
    cfg.solvers
        .iter()
        .enumerate()
        .map(|(s, sc)| {
            let mine: Vec<_> = results.iter().filter(|r| r.solver == s).collect();
            let done: Vec<&Finished> = mine.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let aucs: Vec<f64> = done.iter().filter_map(|f| f.auc).collect();
            BenchmarkRow {
                algorithm: sc.algorithm,
                stop_rule: sc.stop_rule,
                tolerance: sc.tolerance,
                runs: mine.len(),
                mean_seconds: mean(&done.iter().map(|f| f.seconds).collect::<Vec<_>>()),
                mean_iterations: mean(&done.iter().map(|f| f.report.iterations as f64).collect::<Vec<_>>()),
                mean_reconstruction_error: mean(
                    &done.iter().map(|f| f.report.reconstruction_error).collect::<Vec<_>>(),
                ),
                mean_auc: (aucs.len() == done.len() && !aucs.is_empty()).then(|| mean(&aucs)),
                diverged: mine.len() - done.len(),
                cap_exceeded: done
                    .iter()
                    .filter(|f| f.report.termination == Termination::MaxIters)
                    .count(),
                final_objectives: done.iter().map(|f| f.report.final_objective).collect(),
            }
        })
        .collect()
}
