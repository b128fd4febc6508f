//! Nesterov's optimal gradient method with a fixed `1/L` step.

use ndarray::Array2;

use super::subproblem::{projected_gradient_norm, QuadraticSubproblem};
use super::InnerStats;
use crate::linalg::project_nonneg;

/// `α_{k+1} = (1 + sqrt(4 α_k² + 1)) / 2`.
pub fn next_momentum(alpha: f64) -> f64 {
    (1.0 + (4.0 * alpha * alpha + 1.0).sqrt()) / 2.0
}

/// `X^k = P[Y^k - ∇f(Y^k) / L]`, `Y^{k+1} = X^k + (α_k - 1)/α_{k+1} (X^k - X^{k-1})`.
pub fn ne_solve(
    sub: &QuadraticSubproblem<'_>,
    x0: Array2<f64>,
    max_iters: usize,
    tol: f64,
) -> (Array2<f64>, InnerStats) {
    let mut stats = InnerStats::default();
    let lipschitz = sub.lipschitz();
    let mut x = x0;
    let g = sub.gradient(&x);
    stats.final_proj_norm = projected_gradient_norm(&x, &g);
    if !(lipschitz > 0.0) || stats.final_proj_norm < tol {
        return (x, stats);
    }

    let mut y = x.clone();
    let mut alpha = 1.0;
    while stats.iterations < max_iters {
        let gy = sub.gradient(&y);
        let next = project_nonneg(&y - &(gy / lipschitz));
        let alpha_next = next_momentum(alpha);
        y = &next + &((&next - &x) * ((alpha - 1.0) / alpha_next));
        x = next;
        alpha = alpha_next;
        stats.iterations += 1;

        let gx = sub.gradient(&x);
        stats.final_proj_norm = projected_gradient_norm(&x, &gx);
        if stats.final_proj_norm < tol {
            break;
        }
    }
    (x, stats)
}
