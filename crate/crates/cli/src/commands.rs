//! Subcommand bodies. Each returns `Ok(true)` on success and `Ok(false)`
//! when every run diverged.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use jmf::predict::{predict_class, predict_left, predict_right, predict_view, PredictConfig, TrainedModel};
use jmf::synthgen::{generate, SyntheticSpec};
use jmf::{Algorithm, Factorization, Hyperparameters, MultiViewDataset, StopRule, Termination};

use crate::config::{ExperimentConfig, ParamGrid};
use crate::grid::{select_best, GridCell};
use crate::io::{read_matrix, write_ground_truth, write_json, write_matrix};
use crate::runner::{load_instances, run_all, run_jobs, summarize, BenchmarkRow, Finished, Job, RunResult};

pub fn generate_cmd(spec: &SyntheticSpec, out: &Path) -> Result<bool> {
    let gt = generate(spec)?;
    let manifest = write_ground_truth(out, &gt)?;
    for (role, row) in &manifest.degenerate_rows {
        log::warn!("{role} row {row} stayed empty after redraws");
    }
    log::info!("wrote {} matrices to {}", manifest.files.len(), out.display());
    Ok(true)
}

/// What `predict` needs to rebuild a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub params: Hyperparameters,
    pub algorithm: Algorithm,
    pub stop_rule: StopRule,
    pub seed: u64,
    pub w: String,
    pub h: Vec<String>,
}

pub fn save_model(
    dir: &Path,
    factors: &Factorization,
    params: Hyperparameters,
    algorithm: Algorithm,
    stop_rule: StopRule,
    seed: u64,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix(&dir.join("W.csv"), &factors.w)?;
    let mut h = Vec::new();
    for (i, m) in factors.h.iter().enumerate() {
        let name = format!("H_{}.csv", i + 1);
        write_matrix(&dir.join(&name), m)?;
        h.push(name);
    }
    let file = ModelFile {
        params,
        algorithm,
        stop_rule,
        seed,
        w: "W.csv".into(),
        h,
    };
    write_json(&dir.join("model.json"), &file)
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: ModelFile = serde_json::from_str(&text).with_context(|| format!("bad model file {}", path.display()))?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let w = read_matrix(&dir.join(&file.w))?;
    let h = file
        .h
        .iter()
        .map(|p| read_matrix(&dir.join(p)))
        .collect::<Result<Vec<_>>>()?;
    let factors = Factorization::new(w, h)?;
    Ok(TrainedModel::new(
        factors,
        file.params,
        file.algorithm,
        file.stop_rule,
        file.seed,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub stop_rule: StopRule,
    pub tolerance: f64,
    pub seed: u64,
    /// Set when the run diverged.
    pub diverged_at: Option<usize>,
    pub termination: Option<Termination>,
    pub iterations: Option<usize>,
    pub seconds: Option<f64>,
    pub final_objective: Option<f64>,
    pub reconstruction_error: Option<f64>,
    pub auc: Option<f64>,
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<BenchmarkRow>,
    pub runs: Vec<RunRecord>,
}

fn write_trace(path: &Path, f: &Finished) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "objective", "grad_norm", "seconds"])?;
    for t in &f.report.trace {
        w.write_record([
            t.iter.to_string(),
            format!("{:.16e}", t.objective),
            format!("{:.16e}", t.grad_norm),
            format!("{:.6}", t.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v}"))
}

fn write_rows_csv(path: &Path, rows: &[BenchmarkRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "algorithm",
        "stop_rule",
        "tolerance",
        "runs",
        "mean_seconds",
        "mean_iterations",
        "mean_reconstruction_error",
        "mean_auc",
        "diverged",
        "cap_exceeded",
    ])?;
    for r in rows {
        w.write_record([
            r.algorithm.to_string(),
            r.stop_rule.to_string(),
            r.tolerance.to_string(),
            r.runs.to_string(),
            r.mean_seconds.to_string(),
            r.mean_iterations.to_string(),
            r.mean_reconstruction_error.to_string(),
            opt(r.mean_auc),
            r.diverged.to_string(),
            r.cap_exceeded.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn solve_cmd(cfg: &ExperimentConfig, out: &Path, serial: bool) -> Result<bool> {
    cfg.validate()?;
    let instances = load_instances(cfg)?;
    let results = run_all(cfg, &instances, serial)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut runs = Vec::new();
    for r in &results {
        let sc = &cfg.solvers[r.solver];
        let mut rec = RunRecord {
            algorithm: sc.algorithm,
            stop_rule: sc.stop_rule,
            tolerance: sc.tolerance,
            seed: r.seed,
            diverged_at: None,
            termination: None,
            iterations: None,
            seconds: None,
            final_objective: None,
            reconstruction_error: None,
            auc: None,
            dir: None,
        };
        match &r.outcome {
            Err(it) => rec.diverged_at = Some(*it),
            Ok(f) => {
                let name = format!("{:02}_{}_{}_seed{}", r.solver + 1, sc.algorithm, sc.stop_rule, r.seed);
                let dir = out.join("runs").join(&name);
                let k = cfg.seeds.iter().position(|&s| s == r.seed).unwrap_or(0);
                let inst = crate::runner::instance_for(&instances, k);
                let rank = cfg.rank.or(inst.rank).unwrap_or(f.factors.rank());
                save_model(
                    &dir,
                    &f.factors,
                    cfg.hyperparameters(rank, cfg.weights),
                    sc.algorithm,
                    sc.stop_rule,
                    r.seed,
                )?;
                write_trace(&dir.join("trace.csv"), f)?;
                rec.termination = Some(f.report.termination);
                rec.iterations = Some(f.report.iterations);
                rec.seconds = Some(f.seconds);
                rec.final_objective = Some(f.report.final_objective);
                rec.reconstruction_error = Some(f.report.reconstruction_error);
                rec.auc = f.auc;
                rec.dir = Some(format!("runs/{name}"));
            }
        }
        runs.push(rec);
    }
    let rows = summarize(cfg, &results);
    write_rows_csv(&out.join("summary.csv"), &rows)?;
    for r in &rows {
        println!(
            "{:<6} {} tol {:e}: {:.3} s, {:.1} iters, error {:.6e}, auc {}, diverged {}, capped {}",
            r.algorithm.to_string(),
            r.stop_rule,
            r.tolerance,
            r.mean_seconds,
            r.mean_iterations,
            r.mean_reconstruction_error,
            r.mean_auc.map_or("-".into(), |a| format!("{a:.4}")),
            r.diverged,
            r.cap_exceeded
        );
    }
    write_json(&out.join("summary.json"), &Summary { rows, runs })?;
    Ok(results.iter().any(|r| r.outcome.is_ok()))
}

fn cell_of(weights: crate::config::Weights, results: &[&RunResult]) -> GridCell {
    let done: Vec<&Finished> = results.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let n = done.len().max(1) as f64;
    GridCell {
        lambda1: weights.lambda1,
        lambda2: weights.lambda2,
        gamma1: weights.gamma1,
        gamma2: weights.gamma2,
        mean_auc: if done.is_empty() {
            f64::NAN
        } else {
            done.iter().map(|f| f.auc.unwrap_or(f64::NAN)).sum::<f64>() / n
        },
        mean_reconstruction_error: if done.is_empty() {
            f64::NAN
        } else {
            done.iter().map(|f| f.report.reconstruction_error).sum::<f64>() / n
        },
        diverged: results.len() - done.len(),
    }
}

/// Evaluates every grid cell with the first configured solver over all
/// seeds, writes `grid.csv`, `grid.json` and `best.json`.
pub fn gridsearch_cmd(cfg: &ExperimentConfig, grid: Option<&ParamGrid>, out: &Path, serial: bool) -> Result<bool> {
    cfg.validate()?;
    let Some(grid) = grid.or(cfg.grid.as_ref()) else {
        bail!("no parameter grid: add \"grid\" to the config or pass --full-grid");
    };
    let cells = grid.cells(cfg.weights);
    ensure!(!cells.is_empty(), "the parameter grid is empty");
    if cfg.solvers.len() > 1 {
        log::warn!("grid search uses only the first solver ({})", cfg.solvers[0].algorithm);
    }
    let instances = load_instances(cfg)?;
    ensure!(
        instances.iter().all(|i| i.truth.is_some()),
        "grid search needs ground-truth factors to score AUC"
    );
    let jobs: Vec<Job> = cells
        .iter()
        .flat_map(|&weights| {
            (0..cfg.seeds.len()).map(move |seed_index| Job {
                weights,
                solver: 0,
                seed_index,
            })
        })
        .collect();
    let results = run_jobs(cfg, &instances, &jobs, serial)?;
    let per = cfg.seeds.len();
    let table: Vec<GridCell> = cells
        .iter()
        .enumerate()
        .map(|(c, &w)| cell_of(w, &results[c * per..(c + 1) * per].iter().collect::<Vec<_>>()))
        .collect();

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut w = csv::Writer::from_path(out.join("grid.csv"))?;
    for cell in &table {
        w.serialize(cell)?;
    }
    w.flush()?;
    write_json(&out.join("grid.json"), &table)?;
    let Some(best) = select_best(&table) else {
        log::error!("every grid cell diverged");
        return Ok(false);
    };
    let b = &table[best];
    println!(
        "best: lambda1 {} lambda2 {} gamma1 {} gamma2 {}: auc {:.4}, error {:.6e}",
        b.lambda1, b.lambda2, b.gamma1, b.gamma2, b.mean_auc, b.mean_reconstruction_error
    );
    write_json(&out.join("best.json"), b)?;
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PredictMode {
    /// Fit new object rows and classify them by their largest coefficient.
    LClass,
    /// Reconstruct a held-out view of new objects.
    LView,
    /// Fit coefficients for new features.
    R,
}

pub struct PredictArgs {
    pub model: PathBuf,
    pub mode: PredictMode,
    /// 0-based view index and matrix path.
    pub inputs: Vec<(usize, PathBuf)>,
    pub target: Option<usize>,
    pub labels: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub out: PathBuf,
    pub config: PredictConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictReport {
    pub mode: String,
    /// Squared error of the fitted inputs.
    pub reconstruction_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    /// `||X̂ - X|| / ||X||` against `--truth`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
}

fn sq(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let m = read_matrix(path)?;
    ensure!(m.ncols() == 1, "labels must be a single column of 1-based class ids");
    m.iter()
        .map(|&v| {
            ensure!(v >= 1.0 && v.fract() == 0.0, "bad class label {v}");
            Ok(v as usize - 1)
        })
        .collect()
}

pub fn predict_cmd(args: &PredictArgs) -> Result<bool> {
    let model = load_model(&args.model)?;
    ensure!(!args.inputs.is_empty(), "no --input matrices given");
    let mut inputs = Vec::new();
    for (v, p) in &args.inputs {
        ensure!(*v < model.factors.h.len(), "view {} is not in the model", v + 1);
        inputs.push((*v, read_matrix(p)?));
    }
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut report = PredictReport::default();
    let fit_error = |w: &Array2<f64>| -> f64 {
        inputs
            .iter()
            .map(|(v, x)| sq(&(x - &w.dot(&model.factors.h[*v]))))
            .sum()
    };
    match args.mode {
        PredictMode::LClass => {
            report.mode = "l-class".into();
            let w_hat = predict_left(&model, &inputs, &args.config)?;
            report.reconstruction_error = fit_error(&w_hat);
            let classes = predict_class(&w_hat);
            write_matrix(&args.out.join("W_hat.csv"), &w_hat)?;
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_path(args.out.join("classes.csv"))?;
            for c in &classes {
                w.write_record([(c + 1).to_string()])?;
            }
            w.flush()?;
            if let Some(p) = &args.labels {
                let labels = read_labels(p)?;
                ensure!(
                    labels.len() == classes.len(),
                    "{} labels for {} objects",
                    labels.len(),
                    classes.len()
                );
                let hits = labels.iter().zip(&classes).filter(|(a, b)| a == b).count();
                report.accuracy = Some(hits as f64 / labels.len() as f64);
            }
        }
        PredictMode::LView => {
            report.mode = "l-view".into();
            let target = args.target.context("--target is required in l-view mode")?;
            ensure!(
                target < model.factors.h.len(),
                "target view {} is not in the model",
                target + 1
            );
            let x_hat = predict_view(&model, target, &inputs, &args.config)?;
            let w_hat = predict_left(&model, &inputs, &args.config)?;
            report.reconstruction_error = fit_error(&w_hat);
            write_matrix(&args.out.join(format!("X_hat_{}.csv", target + 1)), &x_hat)?;
            if let Some(p) = &args.truth {
                let x = read_matrix(p)?;
                ensure!(
                    x.dim() == x_hat.dim(),
                    "truth is {:?}, prediction is {:?}",
                    x.dim(),
                    x_hat.dim()
                );
                report.relative_error = Some((sq(&(&x_hat - &x)) / sq(&x).max(f64::MIN_POSITIVE)).sqrt());
            }
        }
        PredictMode::R => {
            report.mode = "r".into();
            let mut sorted = inputs.clone();
            sorted.sort_by_key(|(v, _)| *v);
            let data = MultiViewDataset::new(sorted.iter().map(|(_, x)| x.clone()).collect())?;
            let h_hat = predict_right(&model, &data, None, &args.config)?;
            let w = &model.factors.w;
            report.reconstruction_error = sorted.iter().zip(&h_hat).map(|((_, x), h)| sq(&(x - &w.dot(h)))).sum();
            for ((v, _), h) in sorted.iter().zip(&h_hat) {
                write_matrix(&args.out.join(format!("H_hat_{}.csv", v + 1)), h)?;
            }
        }
    }
    println!("{}", serde_json::to_string(&report)?);
    write_json(&args.out.join("report.json"), &report)?;
    Ok(true)
}
