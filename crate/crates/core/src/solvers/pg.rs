//! Projected gradient with an Armijo search along the projection arc.

use ndarray::Array2;

use super::subproblem::{projected_gradient_norm, QuadraticSubproblem};
use super::InnerStats;
use crate::linalg::{inner, project_nonneg};
use crate::model::PgParams;

/// Outcome of one projected-gradient step.
#[derive(Debug, Clone)]
pub struct ArmijoStep {
    pub x: Array2<f64>,
    pub backtracks: usize,
    /// No trial step in `0..=max_backtracks` passed; `x` is the input.
    pub exhausted: bool,
}

/// `X⁺ = P[X - β^t ∇f(X)]` with `t` the smallest nonnegative integer such that
/// `(1 - σ) <∇f, X⁺ - X> + ½ <X⁺ - X, Q (X⁺ - X)> <= 0`.
pub fn armijo_step(sub: &QuadraticSubproblem<'_>, x: &Array2<f64>, g: &Array2<f64>, params: &PgParams) -> ArmijoStep {
    let mut alpha = params.alpha0;
    for t in 0..=params.max_backtracks {
        let trial = project_nonneg(x - &(g * alpha));
        let d = &trial - x;
        let lhs = (1.0 - params.sigma) * inner(g, &d) + 0.5 * sub.curvature(&d);
        if lhs <= 0.0 {
            return ArmijoStep {
                x: trial,
                backtracks: t,
                exhausted: false,
            };
        }
        alpha *= params.beta;
    }
    ArmijoStep {
        x: x.clone(),
        backtracks: params.max_backtracks,
        exhausted: true,
    }
}

/// Runs projected-gradient steps until the projected gradient norm drops
/// below `tol` or `max_iters` steps were taken.
pub fn pg_solve(
    sub: &QuadraticSubproblem<'_>,
    x0: Array2<f64>,
    params: &PgParams,
    max_iters: usize,
    tol: f64,
) -> (Array2<f64>, InnerStats) {
    let mut x = x0;
    let mut stats = InnerStats::default();
    let mut g = sub.gradient(&x);
    let mut proj = projected_gradient_norm(&x, &g);
    while proj >= tol && stats.iterations < max_iters {
        let step = armijo_step(sub, &x, &g, params);
        stats.iterations += 1;
        stats.backtracks += step.backtracks;
        if step.exhausted {
            stats.search_exhausted = true;
            break;
        }
        x = step.x;
        g = sub.gradient(&x);
        proj = projected_gradient_norm(&x, &g);
    }
    stats.final_proj_norm = proj;
    (x, stats)
}
