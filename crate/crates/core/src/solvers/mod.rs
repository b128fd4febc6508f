//! Alternating outer loop: update `W`, then each `H_I` in view order, with
//! one of four block solvers, until a stopping rule fires.

pub mod mur;
pub mod ne;
pub mod panls;
pub mod pg;
pub mod stop;
pub mod subproblem;

use web_time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{JmfError, Result};
use crate::model::{Algorithm, Factorization, Problem, SolverConfig, SolverReport, StopRule, Termination, TraceEntry};
use crate::objective;

pub use mur::{mur_step_h, mur_step_w};
pub use ne::ne_solve;
pub use panls::panls_solve;
pub use pg::{armijo_step, pg_solve};
pub use stop::{check_stop_gradient, check_stop_objective, gradient_stop_reason, StopState};
pub use subproblem::{QuadraticSubproblem, Target};

/// Counters from one block subproblem solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InnerStats {
    pub iterations: usize,
    pub backtracks: usize,
    /// The Armijo search ran out of backtracks; the last iterate is returned.
    pub search_exhausted: bool,
    pub phase_switches: usize,
    pub cg_restarts: usize,
    pub cg_breakdowns: usize,
    pub final_proj_norm: f64,
}

/// Projected gradient on the block subproblem.
pub fn pg_subproblem(
    problem: &Problem,
    factors: &Factorization,
    target: Target,
    config: &SolverConfig,
) -> (Array2<f64>, InnerStats) {
    let sub = QuadraticSubproblem::for_target(problem, factors, target, 0.0, None);
    pg_solve(
        &sub,
        block(factors, target).clone(),
        &config.pg,
        config.inner_iters,
        config.inner_tol,
    )
}

/// Nesterov iteration on the block subproblem.
pub fn ne_subproblem(
    problem: &Problem,
    factors: &Factorization,
    target: Target,
    config: &SolverConfig,
) -> (Array2<f64>, InnerStats) {
    let sub = QuadraticSubproblem::for_target(problem, factors, target, 0.0, None);
    ne_solve(
        &sub,
        block(factors, target).clone(),
        config.inner_iters,
        config.inner_tol,
    )
}

/// PANLS on the proximal block subproblem anchored at `anchor`.
pub fn panls_subproblem(
    problem: &Problem,
    factors: &Factorization,
    target: Target,
    config: &SolverConfig,
    anchor: &Array2<f64>,
) -> (Array2<f64>, InnerStats) {
    let tau = match target {
        Target::W => config.panls.tau1,
        Target::H(_) => config.panls.tau2,
    };
    let sub = QuadraticSubproblem::for_target(problem, factors, target, tau, Some(anchor));
    panls_solve(
        &sub,
        block(factors, target).clone(),
        &config.panls,
        &config.pg,
        config.inner_iters,
        config.inner_tol,
    )
}

fn block(factors: &Factorization, target: Target) -> &Array2<f64> {
    match target {
        Target::W => &factors.w,
        Target::H(i) => &factors.h[i],
    }
}

fn block_mut(factors: &mut Factorization, target: Target) -> &mut Array2<f64> {
    match target {
        Target::W => &mut factors.w,
        Target::H(i) => &mut factors.h[i],
    }
}

/// Updates one block in place with the configured algorithm.
pub fn update_block(
    problem: &Problem,
    factors: &mut Factorization,
    target: Target,
    config: &SolverConfig,
) -> InnerStats {
    let (next, stats) = match config.algorithm {
        Algorithm::MUR => {
            let next = match target {
                Target::W => mur_step_w(problem, factors),
                Target::H(i) => mur_step_h(problem, factors, i),
            };
            (
                next,
                InnerStats {
                    iterations: 1,
                    ..Default::default()
                },
            )
        }
        Algorithm::PG => pg_subproblem(problem, factors, target, config),
        Algorithm::Ne => ne_subproblem(problem, factors, target, config),
        Algorithm::PANLS => {
            let anchor = block(factors, target).clone();
            panls_subproblem(problem, factors, target, config, &anchor)
        }
    };
    *block_mut(factors, target) = next;
    stats
}

/// What happened during one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    /// W-subproblem objective (no proximal term, up to a constant) before
    /// and after the W-update.
    pub w_subproblem: (f64, f64),
    pub inner: Vec<InnerStats>,
}

/// Stateful alternating solver; [`Solver::run`] drives it to termination.
pub struct Solver<'a> {
    problem: &'a Problem,
    config: SolverConfig,
    factors: Factorization,
    stop: StopState,
    trace: Vec<TraceEntry>,
    start: Instant,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a Problem, config: SolverConfig, init: Factorization) -> Result<Self> {
        config.validate()?;
        problem.check_factors(&init)?;
        if !init.is_nonnegative() {
            return Err(JmfError::InvalidParameter("initial factors must be nonnegative".into()));
        }
        let start = Instant::now();
        let f0 = objective::objective_value(problem, &init)?;
        let g0 = objective::projected_gradient_norm(problem, &init)?;
        if !f0.is_finite() {
            return Err(JmfError::Diverged { iteration: 0 });
        }
        Ok(Self {
            problem,
            config,
            factors: init,
            stop: StopState::new(f0, g0),
            trace: Vec::new(),
            start,
        })
    }

    pub fn factors(&self) -> &Factorization {
        &self.factors
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn stop_state(&self) -> &StopState {
        &self.stop
    }

    /// One outer iteration: W-update, H-updates in view order, optional row
    /// normalization, then objective and projected-gradient evaluation.
    pub fn step(&mut self) -> Result<StepInfo> {
        let problem = self.problem;
        let iter = self.trace.len() + 1;
        let mut inner = Vec::with_capacity(problem.num_views() + 1);

        let w_sub = QuadraticSubproblem::for_w(problem, &self.factors, 0.0, None);
        let before = w_sub.value(&self.factors.w);
        inner.push(update_block(problem, &mut self.factors, Target::W, &self.config));
        let after = w_sub.value(&self.factors.w);

        for i in 0..problem.num_views() {
            inner.push(update_block(problem, &mut self.factors, Target::H(i), &self.config));
        }
        if self.config.normalize_rows {
            self.factors.normalize_rows();
        }

        let objective = objective::objective_value(problem, &self.factors)?;
        if !objective.is_finite() {
            return Err(JmfError::Diverged { iteration: iter });
        }
        let grad_norm = objective::projected_gradient_norm(problem, &self.factors)?;
        self.trace.push(TraceEntry {
            iter,
            objective,
            grad_norm,
            seconds: self.start.elapsed().as_secs_f64(),
        });
        Ok(StepInfo {
            iter,
            objective,
            grad_norm,
            w_subproblem: (before, after),
            inner,
        })
    }

    /// Applies the configured stopping rule to the latest step and records
    /// it in the stop state.
    pub fn check_stop(&mut self, info: &StepInfo) -> Option<Termination> {
        let tau = self.config.tolerance;
        let reason = match self.config.stop_rule {
            StopRule::ObjectiveRatio => check_stop_objective(
                self.stop.previous_objective,
                info.objective,
                self.stop.initial_objective,
                tau,
            )
            .then_some(Termination::ToleranceMet),
            StopRule::GradientRatio => gradient_stop_reason(&self.stop, info.grad_norm, tau),
        };
        self.stop.record(info.objective, info.grad_norm);
        reason.or_else(|| (info.iter >= self.config.max_outer_iters).then_some(Termination::MaxIters))
    }

    pub fn run(mut self) -> Result<(Factorization, SolverReport)> {
        let termination = loop {
            let info = self.step()?;
            if let Some(reason) = self.check_stop(&info) {
                break reason;
            }
        };
        let reconstruction_error = objective::reconstruction_error(self.problem, &self.factors)?;
        let last = *self.trace.last().expect("at least one outer iteration");
        let report = SolverReport {
            iterations: last.iter,
            final_objective: last.objective,
            reconstruction_error,
            termination,
            initial_objective: self.stop.initial_objective,
            initial_grad_norm: self.stop.initial_gradient_norm,
            trace: self.trace,
        };
        Ok((self.factors, report))
    }
}

/// Runs the alternating scheme from `init` until a stopping rule fires.
pub fn solve(problem: &Problem, config: &SolverConfig, init: Factorization) -> Result<(Factorization, SolverReport)> {
    Solver::new(problem, *config, init)?.run()
}
