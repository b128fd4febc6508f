#![allow(dead_code)]

pub mod checks;

use jmf::{ConstraintSet, Factorization, Hyperparameters, MultiViewDataset, Problem};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(lo..hi))
}

/// Nonnegative matrix with roughly half the entries zero.
pub fn sparse(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || {
        if rng.gen_bool(0.5) {
            rng.gen_range(0.0..1.0)
        } else {
            0.0
        }
    })
}

pub struct Weights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Weight draw for instance `k`: each weight is zero on its own pattern of
/// instances so that both zero and nonzero values of every weight appear.
pub fn weights_for(k: usize, rng: &mut ChaCha8Rng) -> Weights {
    let mut pick = |bit: usize| {
        if (k >> bit) & 1 == 1 {
            rng.gen_range(0.05..0.8)
        } else {
            0.0
        }
    };
    Weights {
        lambda1: pick(0),
        lambda2: pick(1),
        gamma1: pick(2),
        gamma2: pick(3),
    }
}

/// A random three-view problem with within constraints on two views, one
/// relationship stored as (0, 1) and one stored as (2, 1).
pub fn random_problem(seed: u64, w: &Weights) -> (Problem, Factorization) {
    let mut rng = rng(seed);
    let m = rng.gen_range(2..6);
    let r = rng.gen_range(1..4);
    let ns: Vec<usize> = (0..3).map(|_| rng.gen_range(2..6)).collect();
    let views = ns.iter().map(|&n| uniform(m, n, 0.0, 2.0, &mut rng)).collect();
    let mut cs = ConstraintSet::empty(3);
    cs.add_within(0, sparse(ns[0], ns[0], &mut rng)).unwrap();
    cs.add_within(0, sparse(ns[0], ns[0], &mut rng)).unwrap();
    cs.add_within(2, sparse(ns[2], ns[2], &mut rng)).unwrap();
    cs.add_between(0, 1, sparse(ns[0], ns[1], &mut rng)).unwrap();
    cs.add_between(2, 1, sparse(ns[2], ns[1], &mut rng)).unwrap();
    let params = Hyperparameters::new(r).with_weights(w.lambda1, w.lambda2, w.gamma1, w.gamma2);
    let problem = Problem::new(MultiViewDataset::new(views).unwrap(), cs, params).unwrap();
    // strictly positive so that small perturbations stay in the orthant
    let factors = Factorization {
        w: uniform(m, r, 0.2, 1.5, &mut rng),
        h: ns.iter().map(|&n| uniform(r, n, 0.2, 1.5, &mut rng)).collect(),
    };
    (problem, factors)
}

/// Objective by explicit index loops.
pub fn naive_objective(problem: &Problem, f: &Factorization) -> f64 {
    let p = problem.params();
    let r = p.rank;
    let mut total = 0.0;
    for (i, x) in problem.dataset().views().iter().enumerate() {
        let h = &f.h[i];
        for a in 0..x.nrows() {
            for b in 0..x.ncols() {
                let mut wh = 0.0;
                for k in 0..r {
                    wh += f.w[[a, k]] * h[[k, b]];
                }
                total += (x[[a, b]] - wh).powi(2);
            }
        }
        for theta in problem.constraints().within(i) {
            for k in 0..r {
                for s in 0..theta.nrows() {
                    for t in 0..theta.ncols() {
                        total -= p.lambda1 * h[[k, s]] * theta[[s, t]] * h[[k, t]];
                    }
                }
            }
        }
        for b in 0..h.ncols() {
            let l1: f64 = (0..r).map(|k| h[[k, b]].abs()).sum();
            total += p.gamma2 * l1 * l1;
        }
    }
    for (&(i, j), rel) in problem.constraints().between() {
        for k in 0..r {
            for s in 0..rel.nrows() {
                for t in 0..rel.ncols() {
                    total -= p.lambda2 * f.h[i][[k, s]] * rel[[s, t]] * f.h[j][[k, t]];
                }
            }
        }
    }
    total += p.gamma1 * f.w.iter().map(|v| v * v).sum::<f64>();
    total
}

/// Central differences of `naive_objective` along every entry of one block.
pub fn fd_gradient(problem: &Problem, f: &Factorization, block: Option<usize>, h: f64) -> Array2<f64> {
    let base = match block {
        None => f.w.clone(),
        Some(i) => f.h[i].clone(),
    };
    let mut g = Array2::<f64>::zeros(base.raw_dim());
    for idx in ndarray::indices(base.raw_dim()) {
        let eval = |delta: f64| {
            let mut moved = f.clone();
            let target = match block {
                None => &mut moved.w,
                Some(i) => &mut moved.h[i],
            };
            target[idx] += delta;
            naive_objective(problem, &moved)
        };
        g[idx] = (eval(h) - eval(-h)) / (2.0 * h);
    }
    g
}

/// Dense Hessian of the W-block for row-major `vec(W)`:
/// `2 (I_m ⊗ (Σ H H^T + (γ1 + τ1) I))`.
pub fn dense_hessian_w(problem: &Problem, f: &Factorization, tau1: f64) -> Array2<f64> {
    let (m, r) = f.w.dim();
    let mut g = Array2::<f64>::zeros((r, r));
    for h in &f.h {
        g += &h.dot(&h.t());
    }
    for k in 0..r {
        g[[k, k]] += problem.params().gamma1 + tau1;
    }
    let mut q = Array2::<f64>::zeros((m * r, m * r));
    for i in 0..m {
        for k in 0..r {
            for l in 0..r {
                q[[i * r + k, i * r + l]] = 2.0 * g[[k, l]];
            }
        }
    }
    q
}

/// Dense Hessian of an H-block for row-major `vec(H)`:
/// `2 (G ⊗ I_n) - λ1 (I_r ⊗ Σ_t (Θ_t + Θ_t^T)) + 2 τ2 I`, `G = W^T W + γ2 1 1^T`.
pub fn dense_hessian_h(problem: &Problem, f: &Factorization, view: usize, tau2: f64) -> Array2<f64> {
    let p = problem.params();
    let (r, n) = f.h[view].dim();
    let g = f.w.t().dot(&f.w).mapv(|v| v + p.gamma2);
    let mut s = Array2::<f64>::zeros((n, n));
    for theta in problem.constraints().within(view) {
        s += theta;
        s += &theta.t();
    }
    let mut q = Array2::<f64>::zeros((r * n, r * n));
    for k in 0..r {
        for l in 0..r {
            for j in 0..n {
                q[[k * n + j, l * n + j]] += 2.0 * g[[k, l]];
            }
        }
        for j in 0..n {
            for t in 0..n {
                q[[k * n + j, k * n + t]] -= p.lambda1 * s[[j, t]];
            }
            q[[k * n + j, k * n + j]] += 2.0 * tau2;
        }
    }
    q
}

pub fn quadratic_form(q: &Array2<f64>, d: &Array2<f64>) -> f64 {
    let v = ndarray::Array1::from_iter(d.iter().copied());
    v.dot(&q.dot(&v))
}

/// AUC by counting every positive-negative pair.
pub fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

pub fn permutations(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(r - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, r - 1);
            out.push(q);
        }
    }
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn max_rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}
