//! The joint objective
//!
//! ```text
//! F = Σ_I ||X_I - W H_I||² - λ1 Σ_I Σ_t Tr(H_I Θ_I^(t) H_I^T)
//!     - λ2 Σ_(I,J) Tr(H_I R_IJ H_J^T) + γ1 ||W||² + γ2 Σ_I Σ_j ||h_j^I||_1²
//! ```
//!
//! together with its partial gradients, the projected-gradient stationarity
//! measure, Lipschitz constants of the block gradients and the Hessian
//! quadratic forms used by the line search.

use ndarray::{Array2, Axis};

use crate::error::{JmfError, Result};
use crate::linalg::{self, inner, inner_view, projected_grad_sq, residual_sq};
use crate::model::{Factorization, Problem};

#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub grad_w: Array2<f64>,
    pub grad_h: Vec<Array2<f64>>,
}

/// `Σ_I H_I H_I^T`.
pub(crate) fn coefficient_gram(h: &[Array2<f64>], r: usize) -> Array2<f64> {
    let mut g = Array2::<f64>::zeros((r, r));
    for hi in h {
        g += &hi.dot(&hi.t());
    }
    g
}

/// `(1 1^T) H`: every entry of column `j` becomes the column sum.
pub(crate) fn ones_times(h: &Array2<f64>) -> Array2<f64> {
    let sums = h.sum_axis(Axis(0));
    let mut out = Array2::<f64>::zeros(h.raw_dim());
    for mut row in out.axis_iter_mut(Axis(0)) {
        row.assign(&sums);
    }
    out
}

/// `W^T W + γ2 1 1^T`.
pub(crate) fn basis_gram(w: &Array2<f64>, gamma2: f64) -> Array2<f64> {
    let mut g = w.t().dot(w);
    if gamma2 != 0.0 {
        g.mapv_inplace(|v| v + gamma2);
    }
    g
}

/// `Σ_J H_J M_J` over the relationship matrices touching `view`.
pub(crate) fn between_pull(problem: &Problem, h: &[Array2<f64>], view: usize) -> Option<Array2<f64>> {
    let links = problem.between_for(view);
    if links.is_empty() {
        return None;
    }
    let mut acc = Array2::<f64>::zeros((problem.rank(), problem.view(view).ncols()));
    for (j, m) in links {
        acc += &h[j].dot(&m);
    }
    Some(acc)
}

pub fn objective_value(problem: &Problem, factors: &Factorization) -> Result<f64> {
    problem.check_factors(factors)?;
    let p = problem.params();
    let mut f = reconstruction_error_unchecked(problem, factors);

    if p.lambda1 != 0.0 {
        for (i, h) in factors.h.iter().enumerate() {
            if let Some(s) = problem.within_sum(i) {
                // Σ_t Tr(H Θ_t H^T) = ½ Tr(H S H^T)
                f -= p.lambda1 * 0.5 * inner(&h.dot(s), h);
            }
        }
    }
    if p.lambda2 != 0.0 {
        for (&(i, j), r) in problem.constraints().between() {
            f -= p.lambda2 * inner(&factors.h[i].dot(r), &factors.h[j]);
        }
    }
    if p.gamma1 != 0.0 {
        f += p.gamma1 * linalg::frobenius_sq(&factors.w);
    }
    if p.gamma2 != 0.0 {
        let mut sparsity = 0.0;
        for h in &factors.h {
            for col in h.axis_iter(Axis(1)) {
                let l1: f64 = col.iter().map(|v| v.abs()).sum();
                sparsity += l1 * l1;
            }
        }
        f += p.gamma2 * sparsity;
    }
    Ok(f)
}

fn reconstruction_error_unchecked(problem: &Problem, factors: &Factorization) -> f64 {
    problem
        .dataset()
        .views()
        .iter()
        .zip(&factors.h)
        .map(|(x, h)| residual_sq(x, &factors.w, h))
        .sum()
}

/// `Σ_I ||X_I - W H_I||_F²` with no regularizers.
pub fn reconstruction_error(problem: &Problem, factors: &Factorization) -> Result<f64> {
    problem.check_factors(factors)?;
    Ok(reconstruction_error_unchecked(problem, factors))
}

/// `2 Σ_I (W H_I H_I^T - X_I H_I^T) + 2 γ1 W`.
pub fn grad_w(problem: &Problem, factors: &Factorization) -> Result<Array2<f64>> {
    problem.check_factors(factors)?;
    Ok(grad_w_unchecked(problem, factors))
}

pub(crate) fn grad_w_unchecked(problem: &Problem, factors: &Factorization) -> Array2<f64> {
    let r = problem.rank();
    let mut gram = coefficient_gram(&factors.h, r);
    let gamma1 = problem.params().gamma1;
    for k in 0..r {
        gram[[k, k]] += gamma1;
    }
    let mut g = factors.w.dot(&gram);
    for (x, h) in problem.dataset().views().iter().zip(&factors.h) {
        g -= &x.dot(&h.t());
    }
    g *= 2.0;
    g
}

/// `-2 W^T X_I + 2 W^T W H_I - λ1 H_I S_I - λ2 Σ_J H_J M_J + 2 γ2 (1 1^T) H_I`
/// where `S_I = Σ_t Θ + Θ^T` and `M_J` is `R_IJ^T` or `R_JI`.
pub fn grad_h(problem: &Problem, factors: &Factorization, view: usize) -> Result<Array2<f64>> {
    problem.check_view(view)?;
    problem.check_factors(factors)?;
    Ok(grad_h_unchecked(problem, factors, view))
}

pub(crate) fn grad_h_unchecked(problem: &Problem, factors: &Factorization, view: usize) -> Array2<f64> {
    let p = problem.params();
    let h = &factors.h[view];
    let w = &factors.w;
    let mut g = w.t().dot(&w.dot(h));
    g -= &w.t().dot(problem.view(view));
    if p.gamma2 != 0.0 {
        g.scaled_add(p.gamma2, &ones_times(h));
    }
    g *= 2.0;
    if p.lambda1 != 0.0 {
        if let Some(s) = problem.within_sum(view) {
            g.scaled_add(-p.lambda1, &h.dot(s));
        }
    }
    if p.lambda2 != 0.0 {
        if let Some(c) = between_pull(problem, &factors.h, view) {
            g.scaled_add(-p.lambda2, &c);
        }
    }
    g
}

pub fn gradients(problem: &Problem, factors: &Factorization) -> Result<GradientPair> {
    problem.check_factors(factors)?;
    Ok(GradientPair {
        grad_w: grad_w_unchecked(problem, factors),
        grad_h: (0..problem.num_views())
            .map(|i| grad_h_unchecked(problem, factors, i))
            .collect(),
    })
}

/// Frobenius norm of the projected gradient over `W` and every `H_I`;
/// entries sitting at zero only count the negative part of their gradient.
pub fn projected_gradient_norm(problem: &Problem, factors: &Factorization) -> Result<f64> {
    let g = gradients(problem, factors)?;
    let mut sq = projected_grad_sq(&factors.w, &g.grad_w);
    for (h, gh) in factors.h.iter().zip(&g.grad_h) {
        sq += projected_grad_sq(h, gh);
    }
    Ok(sq.sqrt())
}

/// Plain (unprojected) gradient norm, for comparison with the projected one.
pub fn gradient_norm(problem: &Problem, factors: &Factorization) -> Result<f64> {
    let g = gradients(problem, factors)?;
    let mut sq = linalg::frobenius_sq(&g.grad_w);
    for gh in &g.grad_h {
        sq += linalg::frobenius_sq(gh);
    }
    Ok(sq.sqrt())
}

/// `2 ||Σ_I H_I H_I^T + γ1 I||_2`.
pub fn lipschitz_w(problem: &Problem, factors: &Factorization) -> f64 {
    let r = problem.rank();
    let mut gram = coefficient_gram(&factors.h, r);
    for k in 0..r {
        gram[[k, k]] += problem.params().gamma1;
    }
    2.0 * linalg::spectral_norm_sym(&gram)
}

/// `2 ||W^T W + γ2 1 1^T||_2 + λ1 ||Σ_t Θ_I^(t) + (Θ_I^(t))^T||_2`.
pub fn lipschitz_h(problem: &Problem, factors: &Factorization, view: usize) -> Result<f64> {
    problem.check_view(view)?;
    let p = problem.params();
    let mut l = 2.0 * linalg::spectral_norm_sym(&basis_gram(&factors.w, p.gamma2));
    if p.lambda1 != 0.0 {
        l += p.lambda1 * problem.within_sum_norm(view);
    }
    Ok(l)
}

/// `vec(D)^T Q_W vec(D) = 2 Tr(D (Σ_I H_I H_I^T + (γ1 + τ1) I) D^T)`.
pub fn hessian_quadratic_form_w(problem: &Problem, factors: &Factorization, d: &Array2<f64>, tau1: f64) -> Result<f64> {
    if d.dim() != factors.w.dim() {
        return Err(JmfError::Shape(format!(
            "direction is {:?}, W is {:?}",
            d.shape(),
            factors.w.shape()
        )));
    }
    let r = problem.rank();
    let mut gram = coefficient_gram(&factors.h, r);
    for k in 0..r {
        gram[[k, k]] += problem.params().gamma1 + tau1;
    }
    Ok(2.0 * inner(&d.dot(&gram), d))
}

/// `vec(D)^T Q_H vec(D) = 2 Tr(D^T (W^T W + γ2 1 1^T) D) - λ1 Tr(D S_I D^T) + 2 τ2 ||D||²`.
pub fn hessian_quadratic_form_h(
    problem: &Problem,
    factors: &Factorization,
    view: usize,
    d: &Array2<f64>,
    tau2: f64,
) -> Result<f64> {
    problem.check_view(view)?;
    if d.dim() != factors.h[view].dim() {
        return Err(JmfError::Shape(format!(
            "direction is {:?}, H_{} is {:?}",
            d.shape(),
            view + 1,
            factors.h[view].shape()
        )));
    }
    let p = problem.params();
    let gram = basis_gram(&factors.w, p.gamma2);
    let mut q = 2.0 * inner_view(gram.dot(d).view(), d.view()) + 2.0 * tau2 * linalg::frobenius_sq(d);
    if p.lambda1 != 0.0 {
        if let Some(s) = problem.within_sum(view) {
            q -= p.lambda1 * inner(&d.dot(s), d);
        }
    }
    Ok(q)
}
