#![allow(dead_code)]

//! Property checks shared by the unit-level test files and the acceptance
//! runner. Each returns `Ok(summary)` or `Err(reason)`.

use super::*;
use jmf::evaluate::{auc_score, correlation_matrix, match_components};
use jmf::model::{Algorithm, PanlsParams, PgParams};
use jmf::objective;
use jmf::solvers::{mur_step_h, mur_step_w, ne_solve, panls_solve, pg_solve, QuadraticSubproblem};
use jmf::synthgen::{generate, DatasetId, SyntheticSpec};

pub type Check = std::result::Result<String, String>;

/// Analytic gradients vs central differences of the loop oracle.
pub fn gradients_vs_finite_differences(instances: usize) -> Check {
    let mut worst = 0.0f64;
    for k in 0..instances {
        let mut r = rng(1000 + k as u64);
        let w = weights_for(k, &mut r);
        let (problem, f) = random_problem(2000 + k as u64, &w);
        let g = objective::gradients(&problem, &f).map_err(|e| e.to_string())?;
        let fd = fd_gradient(&problem, &f, None, 1e-5);
        worst = worst.max(max_rel_err(&g.grad_w, &fd));
        for i in 0..problem.num_views() {
            let fd = fd_gradient(&problem, &f, Some(i), 1e-5);
            worst = worst.max(max_rel_err(&g.grad_h[i], &fd));
        }
    }
    if worst < 1e-5 {
        Ok(format!("{instances} instances, max relative error {worst:.2e}"))
    } else {
        Err(format!("max relative error {worst:.2e} >= 1e-5"))
    }
}

/// `||∇f(A) - ∇f(B)|| / ||A - B||` never exceeds the block constants.
pub fn lipschitz_bounds(pairs: usize) -> Check {
    let mut worst_w = 0.0f64;
    let mut worst_h = 0.0f64;
    for k in 0..pairs {
        let mut r = rng(5000 + k as u64);
        let w = weights_for(k, &mut r);
        let (problem, f) = random_problem(6000 + k as u64, &w);

        let lw = objective::lipschitz_w(&problem, &f);
        let sub = QuadraticSubproblem::for_w(&problem, &f, 0.0, None);
        let a = uniform(f.w.nrows(), f.w.ncols(), 0.0, 3.0, &mut r);
        let b = uniform(f.w.nrows(), f.w.ncols(), 0.0, 3.0, &mut r);
        let ratio = (&sub.gradient(&a) - &sub.gradient(&b)).mapv(|v| v * v).sum().sqrt()
            / (&a - &b).mapv(|v| v * v).sum().sqrt();
        worst_w = worst_w.max(ratio / lw);

        let view = k % problem.num_views();
        let lh = objective::lipschitz_h(&problem, &f, view).map_err(|e| e.to_string())?;
        let sub = QuadraticSubproblem::for_h(&problem, &f, view, 0.0, None);
        let (rr, nn) = f.h[view].dim();
        let a = uniform(rr, nn, 0.0, 3.0, &mut r);
        let b = uniform(rr, nn, 0.0, 3.0, &mut r);
        let ratio = (&sub.gradient(&a) - &sub.gradient(&b)).mapv(|v| v * v).sum().sqrt()
            / (&a - &b).mapv(|v| v * v).sum().sqrt();
        worst_h = worst_h.max(ratio / lh);
    }
    // rank-one blocks attain the bound exactly, so allow rounding
    let slack = 1.0 + 1e-12;
    if worst_w <= slack && worst_h <= slack {
        Ok(format!(
            "{pairs} pairs each, max ratio/L: W {worst_w:.4}, H {worst_h:.4}"
        ))
    } else {
        Err(format!("ratio exceeds bound: W {worst_w:.6}, H {worst_h:.6}"))
    }
}

pub fn objective_vs_loops(instances: usize) -> Check {
    let mut worst = 0.0f64;
    for k in 0..instances {
        let mut r = rng(7000 + k as u64);
        let w = weights_for(k, &mut r);
        let (problem, f) = random_problem(8000 + k as u64, &w);
        let a = objective::objective_value(&problem, &f).map_err(|e| e.to_string())?;
        worst = worst.max(rel_err(a, naive_objective(&problem, &f)));
    }
    if worst <= 1e-10 {
        Ok(format!("max relative error {worst:.2e}"))
    } else {
        Err(format!("objective differs from loop oracle by {worst:.2e}"))
    }
}

pub fn auc_vs_pair_counting(instances: usize) -> Check {
    for k in 0..instances {
        let mut r = rng(9000 + k as u64);
        let n = r.gen_range(2..=200);
        // coarse scores so that ties are common
        let scores: Vec<f64> = (0..n).map(|_| (r.gen_range(0.0..1.0f64) * 8.0).floor() / 8.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| r.gen_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let fast = auc_score(&scores, &labels).map_err(|e| e.to_string())?;
        let slow = brute_force_auc(&scores, &labels);
        if fast != slow {
            return Err(format!("instance {k}: {fast} vs brute force {slow}"));
        }
    }
    Ok(format!("{instances} instances exact"))
}

pub fn hessian_vs_kronecker(instances: usize) -> Check {
    let mut worst = 0.0f64;
    for k in 0..instances {
        let mut r = rng(11000 + k as u64);
        let w = weights_for(k, &mut r);
        let (problem, f) = random_problem(12000 + k as u64, &w);
        if f.w.nrows() > 4 || f.h.iter().any(|h| h.ncols() > 4) {
            continue;
        }
        let tau = if k % 2 == 0 { 0.0 } else { 0.3 };
        let d = uniform(f.w.nrows(), f.w.ncols(), -1.0, 1.0, &mut r);
        let a = objective::hessian_quadratic_form_w(&problem, &f, &d, tau).map_err(|e| e.to_string())?;
        worst = worst.max(rel_err(a, quadratic_form(&dense_hessian_w(&problem, &f, tau), &d)));
        for view in 0..problem.num_views() {
            let (rr, nn) = f.h[view].dim();
            let d = uniform(rr, nn, -1.0, 1.0, &mut r);
            let a = objective::hessian_quadratic_form_h(&problem, &f, view, &d, tau).map_err(|e| e.to_string())?;
            worst = worst.max(rel_err(
                a,
                quadratic_form(&dense_hessian_h(&problem, &f, view, tau), &d),
            ));
        }
    }
    if worst <= 1e-10 {
        Ok(format!("max relative error {worst:.2e}"))
    } else {
        Err(format!("quadratic forms differ from dense oracle by {worst:.2e}"))
    }
}

/// Random strictly convex W-subproblem.
pub fn convex_w_subproblem(seed: u64) -> (Problem, Factorization) {
    let mut r = rng(seed);
    let m = r.gen_range(3..12);
    let rank = r.gen_range(2..5);
    let ns: Vec<usize> = (0..2).map(|_| r.gen_range(rank + 1..15)).collect();
    let views = ns.iter().map(|&n| uniform(m, n, 0.0, 3.0, &mut r)).collect();
    let params = Hyperparameters::new(rank).with_weights(0.0, 0.0, r.gen_range(0.01..0.5), 0.0);
    let problem = Problem::new(MultiViewDataset::new(views).unwrap(), ConstraintSet::empty(2), params).unwrap();
    let f = Factorization {
        w: uniform(m, rank, 0.0, 1.0, &mut r),
        h: ns.iter().map(|&n| uniform(rank, n, 0.0, 1.0, &mut r)).collect(),
    };
    (problem, f)
}

/// PG, Ne and PANLS reach the same W-subproblem optimum.
pub fn subproblem_agreement(instances: usize) -> Check {
    let mut worst = 0.0f64;
    for k in 0..instances {
        let (problem, f) = convex_w_subproblem(13000 + k as u64);
        let sub = QuadraticSubproblem::for_w(&problem, &f, 0.0, None);
        let x0 = f.w.clone();
        let (a, _) = pg_solve(&sub, x0.clone(), &PgParams::default(), 20_000, 1e-10);
        let (b, _) = ne_solve(&sub, x0.clone(), 20_000, 1e-10);
        let panls = PanlsParams {
            tau1: 0.0,
            tau2: 0.0,
            ..PanlsParams::default()
        };
        let (c, _) = panls_solve(&sub, x0, &panls, &PgParams::default(), 20_000, 1e-10);
        // compare full objective values, which include the constant part
        let value = |w: Array2<f64>| {
            let g = Factorization { w, h: f.h.clone() };
            objective::objective_value(&problem, &g).unwrap()
        };
        let (fa, fb, fc) = (value(a), value(b), value(c));
        worst = worst.max(rel_err(fa, fb)).max(rel_err(fa, fc)).max(rel_err(fb, fc));
    }
    if worst <= 1e-4 {
        Ok(format!("{instances} subproblems, max relative gap {worst:.2e}"))
    } else {
        Err(format!("solvers disagree by {worst:.2e}"))
    }
}

/// One MUR step at an exact factorization with all weights zero.
pub fn mur_fixed_point(instances: usize) -> Check {
    let mut worst = 0.0f64;
    for k in 0..instances {
        let mut r = rng(14000 + k as u64);
        let m = r.gen_range(2..8);
        let rank = r.gen_range(1..4);
        let w = uniform(m, rank, 0.1, 2.0, &mut r);
        let h: Vec<_> = (0..2)
            .map(|_| uniform(rank, r.gen_range(2..8), 0.1, 2.0, &mut r))
            .collect();
        let views = h.iter().map(|h| w.dot(h)).collect();
        let problem = Problem::new(
            MultiViewDataset::new(views).unwrap(),
            ConstraintSet::empty(2),
            Hyperparameters::new(rank),
        )
        .unwrap();
        let f = Factorization { w, h };
        let w1 = mur_step_w(&problem, &f);
        worst = worst.max((&w1 - &f.w).iter().fold(0.0f64, |a, v| a.max(v.abs())));
        for i in 0..2 {
            let h1 = mur_step_h(&problem, &f, i);
            worst = worst.max((&h1 - &f.h[i]).iter().fold(0.0f64, |a, v| a.max(v.abs())));
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max entry change {worst:.2e}"))
    } else {
        Err(format!("MUR moved an entry by {worst:.2e}"))
    }
}

/// Share of trials in which the greedy matching reaches the exhaustive
/// optimum of total correlation. With `noise` set, the learned basis is a
/// column-shuffled copy of the truth plus uniform noise of that amplitude;
/// otherwise the two matrices are independent.
pub fn greedy_optimal_share(trials: usize, noise: Option<f64>) -> (usize, usize) {
    let mut agree = 0;
    for k in 0..trials {
        let mut r = rng(15000 + k as u64);
        let rank = r.gen_range(2..=4);
        let m = r.gen_range(rank + 2..20);
        let truth = uniform(m, rank, 0.0, 1.0, &mut r);
        let learned = match noise {
            None => uniform(m, rank, 0.0, 1.0, &mut r),
            Some(a) => {
                let perm = &permutations(rank)[r.gen_range(0..(1..=rank).product::<usize>())];
                let mut l = uniform(m, rank, 0.0, a, &mut r);
                for (b, &p) in perm.iter().enumerate() {
                    let mut col = l.column_mut(p);
                    col += &truth.column(b);
                }
                l
            }
        };
        let corr = correlation_matrix(&learned, &truth).unwrap();
        let greedy = match_components(&learned, &truth).unwrap();
        let total = |p: &[usize]| p.iter().enumerate().map(|(b, &a)| corr[[b, a]]).sum::<f64>();
        let best = permutations(rank)
            .iter()
            .map(|p| total(p))
            .fold(f64::NEG_INFINITY, f64::max);
        if total(&greedy) >= best - 1e-12 {
            agree += 1;
        }
    }
    (agree, trials)
}

pub fn small_truth(dataset: DatasetId, seed: u64) -> jmf::synthgen::GroundTruth {
    generate(&SyntheticSpec::new(dataset, seed)).unwrap()
}

pub fn algorithm_list() -> [Algorithm; 4] {
    Algorithm::ALL
}
