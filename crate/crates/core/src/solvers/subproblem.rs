//! Block subproblems of the alternating scheme. With every other block
//! frozen, the objective restricted to `W` or to one `H_I` is a quadratic
//! `f(X) = ½ <X, Q X> + <C, X> + const`, so PG, Ne and PANLS only need the
//! operator `Q` and the linear term `C`.

use ndarray::Array2;

use crate::linalg::{self, inner};
use crate::model::{Factorization, Problem};
use crate::objective::{basis_gram, between_pull, coefficient_gram};

/// Which block a subproblem optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    W,
    H(usize),
}

#[derive(Debug)]
enum Operator<'a> {
    /// `Q D = 2 D G`
    Right,
    /// `Q D = 2 G D - λ1 D S`
    Left {
        within: Option<(f64, &'a Array2<f64>)>,
        within_norm: Option<f64>,
    },
}

/// Quadratic restriction of the objective to one block, optionally with a
/// proximal term `τ ||X - anchor||²`.
#[derive(Debug)]
pub struct QuadraticSubproblem<'a> {
    gram: Array2<f64>,
    op: Operator<'a>,
    linear: Array2<f64>,
}

impl<'a> QuadraticSubproblem<'a> {
    /// `Σ_I ||X_I - W H_I||² + γ1 ||W||² + τ1 ||W - anchor||²` in `W`.
    pub fn for_w(problem: &'a Problem, factors: &Factorization, tau1: f64, anchor: Option<&Array2<f64>>) -> Self {
        let r = problem.rank();
        let mut gram = coefficient_gram(&factors.h, r);
        for k in 0..r {
            gram[[k, k]] += problem.params().gamma1 + tau1;
        }
        let mut linear = Array2::<f64>::zeros(factors.w.raw_dim());
        for (x, h) in problem.dataset().views().iter().zip(&factors.h) {
            linear.scaled_add(-2.0, &x.dot(&h.t()));
        }
        if tau1 != 0.0 {
            linear.scaled_add(-2.0 * tau1, anchor.unwrap_or(&factors.w));
        }
        Self {
            gram,
            op: Operator::Right,
            linear,
        }
    }

    /// The objective in `H_I` with `W` and every other `H_J` frozen, plus
    /// `τ2 ||H_I - anchor||²`.
    pub fn for_h(
        problem: &'a Problem,
        factors: &Factorization,
        view: usize,
        tau2: f64,
        anchor: Option<&Array2<f64>>,
    ) -> Self {
        let p = problem.params();
        let mut gram = basis_gram(&factors.w, p.gamma2);
        for k in 0..problem.rank() {
            gram[[k, k]] += tau2;
        }
        let mut linear = factors.w.t().dot(problem.view(view));
        linear *= -2.0;
        if p.lambda2 != 0.0 {
            if let Some(c) = between_pull(problem, &factors.h, view) {
                linear.scaled_add(-p.lambda2, &c);
            }
        }
        if tau2 != 0.0 {
            linear.scaled_add(-2.0 * tau2, anchor.unwrap_or(&factors.h[view]));
        }
        let within = if p.lambda1 != 0.0 {
            problem.within_sum(view).map(|s| (p.lambda1, s))
        } else {
            None
        };
        let within_norm = within.map(|_| problem.within_sum_norm(view));
        Self {
            gram,
            op: Operator::Left { within, within_norm },
            linear,
        }
    }

    pub fn for_target(
        problem: &'a Problem,
        factors: &Factorization,
        target: Target,
        tau: f64,
        anchor: Option<&Array2<f64>>,
    ) -> Self {
        match target {
            Target::W => Self::for_w(problem, factors, tau, anchor),
            Target::H(i) => Self::for_h(problem, factors, i, tau, anchor),
        }
    }

    /// `Q D`.
    pub fn apply(&self, d: &Array2<f64>) -> Array2<f64> {
        match &self.op {
            Operator::Right => {
                let mut out = d.dot(&self.gram);
                out *= 2.0;
                out
            }
            Operator::Left { within, .. } => {
                let mut out = self.gram.dot(d);
                out *= 2.0;
                if let Some((lambda1, s)) = within {
                    out.scaled_add(-lambda1, &d.dot(*s));
                }
                out
            }
        }
    }

    /// `<D, Q D>`.
    pub fn curvature(&self, d: &Array2<f64>) -> f64 {
        inner(d, &self.apply(d))
    }

    pub fn gradient(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut g = self.apply(x);
        g += &self.linear;
        g
    }

    /// Subproblem objective up to an additive constant.
    pub fn value(&self, x: &Array2<f64>) -> f64 {
        let qx = self.apply(x);
        0.5 * inner(x, &qx) + inner(x, &self.linear)
    }

    /// Value computed from an already available gradient at `x`.
    pub fn value_from_gradient(&self, x: &Array2<f64>, g: &Array2<f64>) -> f64 {
        // ½<x, Qx> + <c, x> = ½<x, g + c>
        0.5 * (inner(x, g) + inner(x, &self.linear))
    }

    /// Lipschitz constant of the gradient: `2 ||G||_2` plus `λ1 ||S||_2`
    /// for the coefficient side.
    pub fn lipschitz(&self) -> f64 {
        let base = 2.0 * linalg::spectral_norm_sym(&self.gram);
        match &self.op {
            Operator::Right => base,
            Operator::Left { within, within_norm } => match (within, within_norm) {
                (Some((lambda1, _)), Some(norm)) => base + lambda1 * norm,
                _ => base,
            },
        }
    }
}

pub fn projected_gradient_norm(x: &Array2<f64>, g: &Array2<f64>) -> f64 {
    linalg::projected_grad_sq(x, g).sqrt()
}
