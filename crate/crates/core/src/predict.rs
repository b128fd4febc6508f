//! Prediction from a trained factorization: refit the basis on new samples
//! with the coefficients frozen (left), or refit the coefficients on new
//! features with the basis frozen (right).

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{JmfError, Result};
use crate::linalg::frobenius_sq;
use crate::model::{
    Algorithm, ConstraintSet, Factorization, Hyperparameters, MultiViewDataset, PanlsParams, PgParams, Problem,
    StopRule,
};
use crate::solvers::{mur_step_h, mur_step_w, ne_solve, panls_solve, pg_solve, QuadraticSubproblem, Target};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub factors: Factorization,
    pub params: Hyperparameters,
    pub algorithm: Algorithm,
    pub stop_rule: StopRule,
    pub seed: u64,
}

impl TrainedModel {
    pub fn new(
        factors: Factorization,
        params: Hyperparameters,
        algorithm: Algorithm,
        stop_rule: StopRule,
        seed: u64,
    ) -> Result<Self> {
        if !factors.is_nonnegative() {
            return Err(JmfError::InvalidParameter("model factors must be nonnegative".into()));
        }
        if factors.rank() != params.rank {
            return Err(JmfError::Shape(format!(
                "factors have rank {}, parameters say {}",
                factors.rank(),
                params.rank
            )));
        }
        Ok(Self {
            factors,
            params,
            algorithm,
            stop_rule,
            seed,
        })
    }
}

/// Block solver settings for prediction. The one-shot subproblems carry no
/// proximal term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    /// `None` uses the model's training algorithm.
    pub algorithm: Option<Algorithm>,
    pub max_iters: usize,
    /// Absolute projected-gradient tolerance; for MUR, the relative change
    /// between successive iterates.
    pub tolerance: f64,
    /// Gauss-Seidel sweeps over coupled coefficient blocks.
    pub max_sweeps: usize,
    pub seed: u64,
    pub pg: PgParams,
    pub panls: PanlsParams,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            algorithm: None,
            max_iters: 20_000,
            tolerance: 1e-9,
            max_sweeps: 50,
            seed: 0,
            pg: PgParams::default(),
            panls: PanlsParams::default(),
        }
    }
}

fn block_of(f: &Factorization, target: Target) -> &Array2<f64> {
    match target {
        Target::W => &f.w,
        Target::H(i) => &f.h[i],
    }
}

fn solve_block(
    problem: &Problem,
    factors: &Factorization,
    target: Target,
    alg: Algorithm,
    cfg: &PredictConfig,
) -> Array2<f64> {
    let x0 = block_of(factors, target).clone();
    if alg == Algorithm::MUR {
        let mut f = factors.clone();
        for _ in 0..cfg.max_iters {
            let next = match target {
                Target::W => mur_step_w(problem, &f),
                Target::H(i) => mur_step_h(problem, &f, i),
            };
            let cur = block_of(&f, target);
            let change = frobenius_sq(&(&next - cur)).sqrt();
            let scale = frobenius_sq(cur).sqrt().max(f64::MIN_POSITIVE);
            match target {
                Target::W => f.w = next,
                Target::H(i) => f.h[i] = next,
            }
            if change <= cfg.tolerance * scale {
                break;
            }
        }
        return block_of(&f, target).clone();
    }
    let sub = QuadraticSubproblem::for_target(problem, factors, target, 0.0, None);
    let (x, _) = match alg {
        Algorithm::PG => pg_solve(&sub, x0, &cfg.pg, cfg.max_iters, cfg.tolerance),
        Algorithm::Ne => ne_solve(&sub, x0, cfg.max_iters, cfg.tolerance),
        Algorithm::PANLS => {
            let panls = PanlsParams {
                tau1: 0.0,
                tau2: 0.0,
                ..cfg.panls
            };
            panls_solve(&sub, x0, &panls, &cfg.pg, cfg.max_iters, cfg.tolerance)
        }
        Algorithm::MUR => unreachable!(),
    };
    x
}

fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen::<f64>())
}

/// Fits `Ŵ` on the supplied test views, each given with the index of the
/// trained view it corresponds to, with the trained `H_I` frozen.
pub fn predict_left(
    model: &TrainedModel,
    test: &[(usize, Array2<f64>)],
    config: &PredictConfig,
) -> Result<Array2<f64>> {
    if test.is_empty() {
        return Err(JmfError::InvalidParameter("no test views supplied".into()));
    }
    let mut h = Vec::with_capacity(test.len());
    for (idx, (view, x)) in test.iter().enumerate() {
        let hv = model.factors.h.get(*view).ok_or(JmfError::UnknownView(*view))?;
        if hv.ncols() != x.ncols() {
            return Err(JmfError::Shape(format!(
                "test view {} has {} columns, model has {}",
                view,
                x.ncols(),
                hv.ncols()
            )));
        }
        if test[..idx].iter().any(|(v, _)| v == view) {
            return Err(JmfError::InvalidParameter(format!("view {view} supplied twice")));
        }
        h.push(hv.clone());
    }
    let dataset = MultiViewDataset::new(test.iter().map(|(_, x)| x.clone()).collect())?;
    let m = dataset.m();
    let params = Hyperparameters {
        lambda1: 0.0,
        lambda2: 0.0,
        ..model.params
    };
    let problem = Problem::new(dataset, ConstraintSet::empty(test.len()), params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let factors = Factorization {
        w: uniform(m, model.params.rank, &mut rng),
        h,
    };
    let alg = config.algorithm.unwrap_or(model.algorithm);
    Ok(solve_block(&problem, &factors, Target::W, alg, config))
}

/// Row-wise argmax of `Ŵ`, lowest index on ties.
pub fn predict_class(w_hat: &Array2<f64>) -> Vec<usize> {
    w_hat
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Reconstructs held-out view `target` as `Ŵ H_target`, with `Ŵ` fitted on
/// the other supplied views.
pub fn predict_view(
    model: &TrainedModel,
    target: usize,
    others: &[(usize, Array2<f64>)],
    config: &PredictConfig,
) -> Result<Array2<f64>> {
    let h_target = model.factors.h.get(target).ok_or(JmfError::UnknownView(target))?;
    if others.iter().any(|(v, _)| *v == target) {
        return Err(JmfError::InvalidParameter(format!(
            "view {target} is the prediction target and cannot be an input"
        )));
    }
    let w_hat = predict_left(model, others, config)?;
    Ok(w_hat.dot(h_target))
}

/// Fits `Ĥ_I` for every test view with the trained `W` frozen. Network
/// constraints on the test features are optional; coupled blocks are
/// updated Gauss-Seidel style until they stop moving.
pub fn predict_right(
    model: &TrainedModel,
    test: &MultiViewDataset,
    constraints: Option<&ConstraintSet>,
    config: &PredictConfig,
) -> Result<Vec<Array2<f64>>> {
    let m = model.factors.w.nrows();
    if test.m() != m {
        return Err(JmfError::Shape(format!(
            "test data has {} rows, model has {}",
            test.m(),
            m
        )));
    }
    let n_views = test.num_views();
    let constraints = constraints.cloned().unwrap_or_else(|| ConstraintSet::empty(n_views));
    let coupled = !constraints.between().is_empty() && model.params.lambda2 != 0.0;
    let problem = Problem::new(test.clone(), constraints, model.params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut factors = Factorization {
        w: model.factors.w.clone(),
        h: test
            .n()
            .into_iter()
            .map(|n| uniform(model.params.rank, n, &mut rng))
            .collect(),
    };
    let alg = config.algorithm.unwrap_or(model.algorithm);
    let sweeps = if coupled { config.max_sweeps.max(1) } else { 1 };
    for _ in 0..sweeps {
        let mut moved = 0.0f64;
        for i in 0..n_views {
            let next = solve_block(&problem, &factors, Target::H(i), alg, config);
            let change = frobenius_sq(&(&next - &factors.h[i])).sqrt();
            let scale = frobenius_sq(&next).sqrt().max(f64::MIN_POSITIVE);
            moved = moved.max(change / scale);
            factors.h[i] = next;
        }
        if moved <= config.tolerance {
            break;
        }
    }
    Ok(factors.h)
}
