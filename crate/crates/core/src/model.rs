//! Problem definition shared by every other module: the multi-view data,
//! the prior-network constraints, the regularization weights and the
//! factor container, plus the solver configuration and report types.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{JmfError, Result};
use crate::linalg;

fn check_nonnegative(what: &str, m: &Array2<f64>) -> Result<()> {
    for ((row, col), &value) in m.indexed_iter() {
        if !(value >= 0.0) {
            return Err(JmfError::Negative {
                what: what.to_string(),
                row,
                col,
                value,
            });
        }
    }
    Ok(())
}

/// `N` nonnegative views `X_I` (m x n_I) over the same `m` objects.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<Array2<f64>>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<Array2<f64>>) -> Result<Self> {
        if views.is_empty() {
            return Err(JmfError::Shape("dataset needs at least one view".into()));
        }
        let m = views[0].nrows();
        for (i, x) in views.iter().enumerate() {
            if x.nrows() != m {
                return Err(JmfError::Shape(format!(
                    "view {i} has {} rows, expected {m}",
                    x.nrows()
                )));
            }
            check_nonnegative(&format!("X_{}", i + 1), x)?;
        }
        Ok(Self { views })
    }

    pub fn views(&self) -> &[Array2<f64>] {
        &self.views
    }

    pub fn view(&self, i: usize) -> &Array2<f64> {
        &self.views[i]
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    /// Shared row count.
    pub fn m(&self) -> usize {
        self.views[0].nrows()
    }

    /// Column counts `n_I`.
    pub fn n(&self) -> Vec<usize> {
        self.views.iter().map(|x| x.ncols()).collect()
    }

    pub fn into_views(self) -> Vec<Array2<f64>> {
        self.views
    }
}

/// Within-view constraint matrices `Θ_I^(t)` and between-view relationship
/// matrices `R_IJ`. Any of them may be missing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    within: Vec<Vec<Array2<f64>>>,
    between: BTreeMap<(usize, usize), Array2<f64>>,
}

impl ConstraintSet {
    /// No constraints for a dataset with `num_views` views.
    pub fn empty(num_views: usize) -> Self {
        Self {
            within: vec![Vec::new(); num_views],
            between: BTreeMap::new(),
        }
    }

    pub fn add_within(&mut self, view: usize, theta: Array2<f64>) -> Result<()> {
        if view >= self.within.len() {
            return Err(JmfError::UnknownView(view));
        }
        if theta.nrows() != theta.ncols() {
            return Err(JmfError::Shape(format!(
                "within-constraint for view {view} must be square, got {:?}",
                theta.shape()
            )));
        }
        check_nonnegative(&format!("Theta_{}", view + 1), &theta)?;
        self.within[view].push(theta);
        Ok(())
    }

    /// Stores `R_IJ`; `i` and `j` are zero-based view indices and must differ.
    pub fn add_between(&mut self, i: usize, j: usize, r: Array2<f64>) -> Result<()> {
        let n = self.within.len();
        if i >= n {
            return Err(JmfError::UnknownView(i));
        }
        if j >= n {
            return Err(JmfError::UnknownView(j));
        }
        if i == j {
            return Err(JmfError::Shape(
                "between-view relationship needs two distinct views".into(),
            ));
        }
        check_nonnegative(&format!("R_{}{}", i + 1, j + 1), &r)?;
        self.between.insert((i, j), r);
        Ok(())
    }

    pub fn num_views(&self) -> usize {
        self.within.len()
    }

    pub fn within(&self, view: usize) -> &[Array2<f64>] {
        &self.within[view]
    }

    pub fn between(&self) -> &BTreeMap<(usize, usize), Array2<f64>> {
        &self.between
    }

    pub fn is_empty(&self) -> bool {
        self.between.is_empty() && self.within.iter().all(|w| w.is_empty())
    }
}

/// Rank and regularization weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub rank: usize,
    /// Within-constraint weight.
    #[serde(default)]
    pub lambda1: f64,
    /// Between-constraint weight.
    #[serde(default)]
    pub lambda2: f64,
    /// Scale penalty on `W`.
    #[serde(default)]
    pub gamma1: f64,
    /// Sparsity penalty on the columns of every `H_I`.
    #[serde(default)]
    pub gamma2: f64,
}

impl Hyperparameters {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            lambda1: 0.0,
            lambda2: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
        }
    }

    pub fn with_weights(mut self, lambda1: f64, lambda2: f64, gamma1: f64, gamma2: f64) -> Self {
        self.lambda1 = lambda1;
        self.lambda2 = lambda2;
        self.gamma1 = gamma1;
        self.gamma2 = gamma2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank < 1 {
            return Err(JmfError::InvalidParameter("rank must be at least 1".into()));
        }
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(JmfError::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Shared basis `W` (m x r) and per-view coefficients `H_I` (r x n_I).
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub w: Array2<f64>,
    pub h: Vec<Array2<f64>>,
}

impl Factorization {
    pub fn new(w: Array2<f64>, h: Vec<Array2<f64>>) -> Result<Self> {
        let r = w.ncols();
        check_nonnegative("W", &w)?;
        for (i, hi) in h.iter().enumerate() {
            if hi.nrows() != r {
                return Err(JmfError::Shape(format!(
                    "H_{} has {} rows but W has {r} columns",
                    i + 1,
                    hi.nrows()
                )));
            }
            check_nonnegative(&format!("H_{}", i + 1), hi)?;
        }
        Ok(Self { w, h })
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    /// `W H_I`.
    pub fn reconstruct(&self, view: usize) -> Array2<f64> {
        self.w.dot(&self.h[view])
    }

    pub fn is_nonnegative(&self) -> bool {
        self.w.iter().all(|&v| v >= 0.0) && self.h.iter().all(|h| h.iter().all(|&v| v >= 0.0))
    }

    /// Rescales row `k` of every `H_I` by `1/s_k` and column `k` of `W` by
    /// `s_k`, where `s_k` is the norm of row `k` of `[H_1, ..., H_N]`.
    /// Every product `W H_I` is unchanged.
    pub fn normalize_rows(&mut self) {
        for k in 0..self.rank() {
            let sq: f64 = self.h.iter().map(|h| h.row(k).iter().map(|v| v * v).sum::<f64>()).sum();
            let s = sq.sqrt();
            if s > 0.0 && s.is_finite() {
                for h in &mut self.h {
                    h.row_mut(k).mapv_inplace(|v| v / s);
                }
                self.w.column_mut(k).mapv_inplace(|v| v * s);
            }
        }
    }
}

/// Sum of `Θ + Θ^T` over a view's within-constraints, kept with its lazily
/// computed spectral norm.
#[derive(Debug)]
struct WithinSum {
    sum: Array2<f64>,
    norm: OnceLock<f64>,
}

/// Immutable binding of data, constraints and weights.
#[derive(Debug)]
pub struct Problem {
    dataset: MultiViewDataset,
    constraints: ConstraintSet,
    params: Hyperparameters,
    within_sums: Vec<Option<WithinSum>>,
}

impl Problem {
    pub fn new(dataset: MultiViewDataset, constraints: ConstraintSet, params: Hyperparameters) -> Result<Self> {
        params.validate()?;
        let n = dataset.n();
        if constraints.num_views() != dataset.num_views() {
            return Err(JmfError::Shape(format!(
                "constraint set covers {} views, dataset has {}",
                constraints.num_views(),
                dataset.num_views()
            )));
        }
        for (i, &ni) in n.iter().enumerate() {
            for theta in constraints.within(i) {
                if theta.nrows() != ni {
                    return Err(JmfError::Shape(format!(
                        "within-constraint for view {} is {}x{}, expected {ni}x{ni}",
                        i + 1,
                        theta.nrows(),
                        theta.ncols()
                    )));
                }
            }
        }
        for (&(i, j), r) in constraints.between() {
            if r.dim() != (n[i], n[j]) {
                return Err(JmfError::Shape(format!(
                    "R_{}{} is {:?}, expected {}x{}",
                    i + 1,
                    j + 1,
                    r.shape(),
                    n[i],
                    n[j]
                )));
            }
        }
        let min_dim = n.iter().copied().min().unwrap_or(0).min(dataset.m());
        if params.rank > min_dim {
            log::warn!(
                "rank {} exceeds min(m, n_I) = {min_dim}; the factorization is overparameterized",
                params.rank
            );
        }

        let within_sums = (0..dataset.num_views())
            .map(|i| {
                let thetas = constraints.within(i);
                if thetas.is_empty() {
                    return None;
                }
                let mut sum = Array2::<f64>::zeros((n[i], n[i]));
                for theta in thetas {
                    sum += theta;
                    sum += &theta.t();
                }
                Some(WithinSum {
                    sum,
                    norm: OnceLock::new(),
                })
            })
            .collect();

        Ok(Self {
            dataset,
            constraints,
            params,
            within_sums,
        })
    }

    pub fn dataset(&self) -> &MultiViewDataset {
        &self.dataset
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn params(&self) -> &Hyperparameters {
        &self.params
    }

    pub fn rank(&self) -> usize {
        self.params.rank
    }

    pub fn num_views(&self) -> usize {
        self.dataset.num_views()
    }

    pub fn view(&self, i: usize) -> &Array2<f64> {
        self.dataset.view(i)
    }

    pub(crate) fn check_view(&self, i: usize) -> Result<()> {
        if i < self.num_views() {
            Ok(())
        } else {
            Err(JmfError::UnknownView(i))
        }
    }

    /// `Σ_t Θ_I^(t) + (Θ_I^(t))^T`, or `None` when view `I` has no
    /// within-constraints.
    pub fn within_sum(&self, view: usize) -> Option<&Array2<f64>> {
        self.within_sums[view].as_ref().map(|w| &w.sum)
    }

    /// Spectral norm of [`Problem::within_sum`], 0 when absent.
    pub fn within_sum_norm(&self, view: usize) -> f64 {
        match &self.within_sums[view] {
            Some(w) => *w.norm.get_or_init(|| linalg::spectral_norm_sym(&w.sum)),
            None => 0.0,
        }
    }

    /// Relationship matrices touching `view`, each oriented as `n_J x n_I`
    /// so that `H_J · M` is `r x n_I`: `R_IJ^T` for a stored `R_IJ` and
    /// `R_JI` for a stored `R_JI`.
    pub fn between_for(&self, view: usize) -> Vec<(usize, ArrayView2<'_, f64>)> {
        self.constraints
            .between()
            .iter()
            .filter_map(|(&(i, j), r)| {
                if i == view {
                    Some((j, r.t()))
                } else if j == view {
                    Some((i, r.view()))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Verifies that `factors` fits this problem.
    pub fn check_factors(&self, factors: &Factorization) -> Result<()> {
        let r = self.rank();
        if factors.w.dim() != (self.dataset.m(), r) {
            return Err(JmfError::Shape(format!(
                "W is {:?}, expected {}x{r}",
                factors.w.shape(),
                self.dataset.m()
            )));
        }
        if factors.h.len() != self.num_views() {
            return Err(JmfError::Shape(format!(
                "{} coefficient matrices for {} views",
                factors.h.len(),
                self.num_views()
            )));
        }
        for (i, (h, x)) in factors.h.iter().zip(self.dataset.views()).enumerate() {
            if h.dim() != (r, x.ncols()) {
                return Err(JmfError::Shape(format!(
                    "H_{} is {:?}, expected {r}x{}",
                    i + 1,
                    h.shape(),
                    x.ncols()
                )));
            }
        }
        Ok(())
    }
}

/// Uniform(0,1) draws for `W` and every `H_I`, then each column of each
/// `H_I` scaled to unit Euclidean norm.
pub fn init_factors(problem: &Problem, seed: u64) -> Factorization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = problem.rank();
    let m = problem.dataset().m();
    let w = Array2::from_shape_simple_fn((m, r), || rng.gen::<f64>());
    let h = problem
        .dataset()
        .n()
        .into_iter()
        .map(|n| {
            let mut h = Array2::from_shape_simple_fn((r, n), || rng.gen::<f64>());
            for mut col in h.axis_iter_mut(Axis(1)) {
                let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    col.mapv_inplace(|v| v / norm);
                }
            }
            h
        })
        .collect();
    Factorization { w, h }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(alias = "mur")]
    MUR,
    #[serde(alias = "pg")]
    PG,
    #[serde(alias = "ne")]
    Ne,
    #[serde(alias = "panls")]
    PANLS,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::MUR, Algorithm::PG, Algorithm::Ne, Algorithm::PANLS];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::MUR => "MUR",
            Algorithm::PG => "PG",
            Algorithm::Ne => "Ne",
            Algorithm::PANLS => "PANLS",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = JmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mur" => Ok(Algorithm::MUR),
            "pg" => Ok(Algorithm::PG),
            "ne" => Ok(Algorithm::Ne),
            "panls" => Ok(Algorithm::PANLS),
            _ => Err(JmfError::InvalidParameter(format!("unknown algorithm {s:?}"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outer stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopRule {
    /// Relative objective decrease against total decrease since the start.
    #[serde(alias = "stop1", alias = "Stop1")]
    ObjectiveRatio,
    /// Projected-gradient norm relative to its initial value, or a stalled
    /// norm over a 10-iteration window.
    #[serde(alias = "stop2", alias = "Stop2")]
    GradientRatio,
}

impl std::fmt::Display for StopRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopRule::ObjectiveRatio => f.write_str("Stop1"),
            StopRule::GradientRatio => f.write_str("Stop2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PgParams {
    /// Sufficient-decrease constant.
    pub sigma: f64,
    /// Backtracking factor.
    pub beta: f64,
    /// Initial trial step.
    pub alpha0: f64,
    pub max_backtracks: usize,
}

impl Default for PgParams {
    fn default() -> Self {
        Self {
            sigma: 0.01,
            beta: 0.1,
            alpha0: 1.0,
            max_backtracks: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PanlsParams {
    pub eta: f64,
    /// Exponent on the projected-gradient norm for the gradient test of the
    /// release set.
    pub alpha: f64,
    /// Exponent on the projected-gradient norm for the value test of the
    /// release set.
    pub beta: f64,
    pub rho: f64,
    pub n1: usize,
    pub n2: usize,
    /// Proximal weight on `W`.
    pub tau1: f64,
    /// Proximal weight on each `H_I`.
    pub tau2: f64,
}

impl Default for PanlsParams {
    fn default() -> Self {
        Self {
            eta: 0.1,
            alpha: 1.0,
            beta: 0.1,
            rho: 0.5,
            n1: 2,
            n2: 1,
            tau1: 1e-3,
            tau2: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub stop_rule: StopRule,
    pub tolerance: f64,
    pub max_outer_iters: usize,
    /// Inner iteration cap `K`, shared by the W- and H-subproblems.
    pub inner_iters: usize,
    /// Absolute projected-gradient tolerance of each subproblem.
    pub inner_tol: f64,
    pub seed: u64,
    pub normalize_rows: bool,
    pub pg: PgParams,
    pub panls: PanlsParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::PANLS,
            stop_rule: StopRule::ObjectiveRatio,
            tolerance: 1e-6,
            max_outer_iters: 2000,
            inner_iters: 500,
            inner_tol: 1e-6,
            seed: 0,
            normalize_rows: true,
            pg: PgParams::default(),
            panls: PanlsParams::default(),
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, stop_rule: StopRule, tolerance: f64) -> Self {
        Self {
            algorithm,
            stop_rule,
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(JmfError::InvalidParameter(msg.to_string()));
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if self.max_outer_iters == 0 || self.inner_iters == 0 {
            return bad("iteration caps must be positive");
        }
        if !(self.inner_tol >= 0.0) {
            return bad("inner tolerance must be >= 0");
        }
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.pg.sigma) || !open_unit(self.pg.beta) {
            return bad("PG sigma and beta must lie in (0, 1)");
        }
        if !(self.pg.alpha0 > 0.0) {
            return bad("PG alpha0 must be positive");
        }
        if !open_unit(self.panls.rho) {
            return bad("PANLS rho must lie in (0, 1)");
        }
        if !(self.panls.eta > 0.0) {
            return bad("PANLS eta must be positive");
        }
        if !(self.panls.tau1 >= 0.0) || !(self.panls.tau2 >= 0.0) {
            return bad("proximal weights must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    /// Cumulative wall-clock seconds since the solve started.
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ToleranceMet,
    SlowGradientChange,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub trace: Vec<TraceEntry>,
    pub termination: Termination,
    pub final_objective: f64,
    pub reconstruction_error: f64,
    pub iterations: usize,
    /// Objective and projected-gradient norm at the initial factors.
    pub initial_objective: f64,
    pub initial_grad_norm: f64,
}
