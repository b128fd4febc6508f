//! Proximal alternating nonnegative least squares: an active-set scheme that
//! alternates projected-gradient steps (to identify the zero pattern) with
//! unconstrained conjugate-gradient steps on the currently free entries.

use ndarray::{Array2, Zip};

use super::pg::armijo_step;
use super::subproblem::{projected_gradient_norm, QuadraticSubproblem};
use super::InnerStats;
use crate::linalg::inner;
use crate::model::{PanlsParams, PgParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Projected,
    Conjugate,
}

/// Conjugate-gradient state restricted to the free set.
struct CgState {
    direction: Array2<f64>,
    /// Squared norm of the masked residual that produced `direction`.
    rr: f64,
}

fn active_count(x: &Array2<f64>) -> usize {
    x.iter().filter(|&&v| v <= 0.0).count()
}

/// Norm of the gradient restricted to the strictly positive entries.
fn free_gradient_norm(x: &Array2<f64>, g: &Array2<f64>) -> f64 {
    Zip::from(x)
        .and(g)
        .fold(0.0, |acc, &xv, &gv| if xv > 0.0 { acc + gv * gv } else { acc })
        .sqrt()
}

/// Negative gradient on the free entries, zero on the active ones.
fn masked_residual(x: &Array2<f64>, g: &Array2<f64>) -> Array2<f64> {
    let mut r = Array2::<f64>::zeros(x.raw_dim());
    Zip::from(&mut r).and(x).and(g).for_each(|r, &xv, &gv| {
        if xv > 0.0 {
            *r = -gv;
        }
    });
    r
}

/// Entries that are far from the bound yet carry a large gradient:
/// `|g_i| >= ||∇^P||^α` and `x_i >= ||∇^P||^β`.
fn release_set_nonempty(x: &Array2<f64>, g: &Array2<f64>, proj: f64, params: &PanlsParams) -> bool {
    let g_thresh = proj.powf(params.alpha);
    let x_thresh = proj.powf(params.beta);
    Zip::from(x).and(g).fold(false, |found, &xv, &gv| {
        found || (gv.abs() >= g_thresh && xv >= x_thresh)
    })
}

/// Minimizes the (proximal) block subproblem starting from `x0`.
pub fn panls_solve(
    sub: &QuadraticSubproblem<'_>,
    x0: Array2<f64>,
    params: &PanlsParams,
    pg: &PgParams,
    max_iters: usize,
    tol: f64,
) -> (Array2<f64>, InnerStats) {
    let mut stats = InnerStats::default();
    let mut x = x0;
    let mut g = sub.gradient(&x);
    let mut proj = projected_gradient_norm(&x, &g);
    let mut eta = params.eta;
    let mut phase = Phase::Projected;
    let mut streak = 0usize;
    let mut cg: Option<CgState> = None;

    while proj > tol && stats.iterations < max_iters {
        stats.iterations += 1;
        match phase {
            Phase::Projected => {
                let step = armijo_step(sub, &x, &g, pg);
                stats.backtracks += step.backtracks;
                if step.exhausted {
                    stats.search_exhausted = true;
                    break;
                }
                x = step.x;
                g = sub.gradient(&x);
                proj = projected_gradient_norm(&x, &g);
                if free_gradient_norm(&x, &g) < eta * proj {
                    // the bound-constrained part still dominates
                    eta *= params.rho;
                    streak = 0;
                } else {
                    streak += 1;
                    if streak >= params.n1 {
                        phase = Phase::Conjugate;
                        cg = None;
                        streak = 0;
                        stats.phase_switches += 1;
                    }
                }
            }
            Phase::Conjugate => {
                let active_before = active_count(&x);
                let release = release_set_nonempty(&x, &g, proj, params);
                let state = cg.get_or_insert_with(|| {
                    let r = masked_residual(&x, &g);
                    let rr = inner(&r, &r);
                    CgState { direction: r, rr }
                });
                let d = &state.direction;
                let curv = sub.curvature(d);
                if state.rr == 0.0 || !(curv > 0.0) || !curv.is_finite() {
                    // non-positive curvature on the free set: fall back to a PG step
                    stats.cg_breakdowns += 1;
                    let step = armijo_step(sub, &x, &g, pg);
                    stats.backtracks += step.backtracks;
                    cg = None;
                    phase = Phase::Projected;
                    stats.phase_switches += 1;
                    if step.exhausted {
                        stats.search_exhausted = true;
                        break;
                    }
                    x = step.x;
                    g = sub.gradient(&x);
                    proj = projected_gradient_norm(&x, &g);
                    continue;
                }
                let step = state.rr / curv;

                // largest step keeping the free entries nonnegative
                let mut max_step = f64::INFINITY;
                Zip::from(&x).and(d).for_each(|&xv, &dv| {
                    if dv < 0.0 {
                        max_step = max_step.min(-xv / dv);
                    }
                });
                let hit_bound = max_step <= step;
                let t = if hit_bound { max_step } else { step };
                Zip::from(&mut x).and(d).for_each(|xv, &dv| {
                    if dv != 0.0 {
                        let moved = *xv + t * dv;
                        *xv = if moved > 0.0 { moved } else { 0.0 };
                    }
                });
                if hit_bound {
                    // pin the blocking entries exactly at zero
                    Zip::from(&mut x).and(d).for_each(|xv, &dv| {
                        if dv < 0.0 && *xv <= f64::EPSILON * t * dv.abs() {
                            *xv = 0.0;
                        }
                    });
                }

                g = sub.gradient(&x);
                proj = projected_gradient_norm(&x, &g);
                let active_after = active_count(&x);
                let grown = active_after.saturating_sub(active_before);

                let stalled = free_gradient_norm(&x, &g) < eta * proj;
                if stalled || (release && grown > 0 && grown <= params.n2) {
                    phase = Phase::Projected;
                    cg = None;
                    stats.phase_switches += 1;
                } else if hit_bound || active_after != active_before {
                    // the free set changed: restart on the reduced dimension
                    cg = None;
                    stats.cg_restarts += 1;
                } else {
                    let r = masked_residual(&x, &g);
                    let rr = inner(&r, &r);
                    let state = cg.as_mut().expect("conjugate state present");
                    let beta = rr / state.rr;
                    let mut direction = r;
                    direction.scaled_add(beta, &state.direction);
                    state.direction = direction;
                    state.rr = rr;
                }
            }
        }
    }
    stats.final_proj_norm = proj;
    (x, stats)
}
