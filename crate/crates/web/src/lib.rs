//! wasm-bindgen bindings for the browser demo: generate a synthetic
//! instance, run one solver with its objective trace, and score the result
//! against the planted factors. Everything crossing the boundary is a
//! number, a string or a flat row-major `Vec<f64>`.

use jmf::evaluate::{aligned_scores, evaluate, EvalResult};
use jmf::model::init_factors;
use jmf::synthgen::{generate, DatasetId, GroundTruth, SyntheticSpec};
use jmf::{solve, Algorithm, Factorization, Hyperparameters, JmfError, SolverConfig, SolverReport, StopRule};
use ndarray::Array2;
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Demo {
    truth: GroundTruth,
    learned: Option<Learned>,
}

struct Learned {
    factors: Factorization,
    report: SolverReport,
    eval: EvalResult,
}

/// Settings of one solve; weights default to zero (no constraints used).
#[derive(Debug, Clone, Copy)]
pub struct RunSettings {
    pub algorithm: Algorithm,
    pub tolerance: f64,
    pub max_iters: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub seed: u64,
}

fn flat(m: &Array2<f64>) -> Vec<f64> {
    m.iter().copied().collect()
}

fn js(e: JmfError) -> JsError {
    JsError::new(&e.to_string())
}

/// Native entry points, shared with the tests.
impl Demo {
    pub fn create(dataset: &str, seed: u64, noise: Option<f64>) -> jmf::Result<Demo> {
        let id: DatasetId = dataset.parse()?;
        let mut spec = SyntheticSpec::new(id, seed);
        if let Some(mu) = noise {
            spec = spec.with_noise(mu);
        }
        Ok(Demo {
            truth: generate(&spec)?,
            learned: None,
        })
    }

    pub fn run(&mut self, s: RunSettings) -> jmf::Result<()> {
        let params = Hyperparameters::new(self.truth.rank()).with_weights(s.lambda1, s.lambda2, s.gamma1, s.gamma2);
        let constrained = s.lambda1 != 0.0 || s.lambda2 != 0.0;
        let problem = self.truth.problem(params, constrained)?;
        let config = SolverConfig {
            max_outer_iters: s.max_iters,
            seed: s.seed,
            ..SolverConfig::new(s.algorithm, StopRule::ObjectiveRatio, s.tolerance)
        };
        config.validate()?;
        let (factors, report) = solve(&problem, &config, init_factors(&problem, s.seed))?;
        let eval = evaluate(&factors, &self.truth)?;
        self.learned = Some(Learned { factors, report, eval });
        Ok(())
    }

    fn learned(&self) -> Option<&Learned> {
        self.learned.as_ref()
    }
}

#[wasm_bindgen]
impl Demo {
    /// `noise < 0` keeps the dataset's default noise level.
    #[wasm_bindgen(constructor)]
    pub fn new(dataset: &str, seed: u32, noise: f64) -> Result<Demo, JsError> {
        Demo::create(dataset, seed.into(), (noise >= 0.0).then_some(noise)).map_err(js)
    }

    pub fn rows(&self) -> usize {
        self.truth.w0.nrows()
    }

    pub fn rank(&self) -> usize {
        self.truth.rank()
    }

    pub fn views(&self) -> usize {
        self.truth.x.len()
    }

    pub fn view_cols(&self, view: usize) -> usize {
        self.truth.x.get(view).map_or(0, |x| x.ncols())
    }

    pub fn truth_w(&self) -> Vec<f64> {
        flat(&self.truth.w0)
    }

    pub fn data(&self, view: usize) -> Vec<f64> {
        self.truth.x.get(view).map(flat).unwrap_or_default()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn solve(
        &mut self,
        algorithm: &str,
        tolerance: f64,
        max_iters: u32,
        lambda1: f64,
        lambda2: f64,
        gamma1: f64,
        gamma2: f64,
        seed: u32,
    ) -> Result<(), JsError> {
        let algorithm: Algorithm = algorithm.parse().map_err(js)?;
        self.run(RunSettings {
            algorithm,
            tolerance,
            max_iters: max_iters as usize,
            lambda1,
            lambda2,
            gamma1,
            gamma2,
            seed: seed.into(),
        })
        .map_err(js)
    }

    /// Objective after each outer iteration.
    pub fn objective_trace(&self) -> Vec<f64> {
        self.learned()
            .map(|l| l.report.trace.iter().map(|t| t.objective).collect())
            .unwrap_or_default()
    }

    pub fn grad_trace(&self) -> Vec<f64> {
        self.learned()
            .map(|l| l.report.trace.iter().map(|t| t.grad_norm).collect())
            .unwrap_or_default()
    }

    pub fn seconds(&self) -> f64 {
        self.learned()
            .and_then(|l| l.report.trace.last())
            .map_or(0.0, |t| t.seconds)
    }

    /// Learned W with columns in truth order, each scaled to max 1.
    pub fn learned_w(&self) -> Vec<f64> {
        self.learned()
            .map(|l| flat(&aligned_scores(&l.factors, &l.eval.matching).w))
            .unwrap_or_default()
    }

    pub fn auc(&self) -> f64 {
        self.learned().map_or(f64::NAN, |l| l.eval.auc)
    }

    pub fn auc_w(&self) -> f64 {
        self.learned().map_or(f64::NAN, |l| l.eval.auc_w)
    }

    /// Per-view H AUC; NaN where a view's truth has a single class.
    pub fn auc_h(&self) -> Vec<f64> {
        self.learned()
            .map(|l| l.eval.auc_h.iter().map(|a| a.unwrap_or(f64::NAN)).collect())
            .unwrap_or_default()
    }

    pub fn reconstruction_error(&self) -> f64 {
        self.learned().map_or(f64::NAN, |l| l.eval.reconstruction_error)
    }

    pub fn iterations(&self) -> usize {
        self.learned().map_or(0, |l| l.report.iterations)
    }
}
