//! Multiplicative updates derived from the KKT conditions.

use ndarray::{Array2, Zip};

use crate::model::{Factorization, Problem};
use crate::objective::{basis_gram, between_pull, coefficient_gram};

/// Floor on every denominator so empty rows or columns do not divide by
/// zero. A floor rather than an additive shift keeps exact factorizations
/// fixed.
pub const MUR_EPS: f64 = 1e-12;

fn apply_ratio(x: &Array2<f64>, num: &Array2<f64>, den: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    Zip::from(&mut out).and(num).and(den).for_each(|o, &n, &d| {
        *o *= n / d.max(MUR_EPS);
    });
    out
}

/// `w_ij ← w_ij (Σ_I X_I H_I^T)_ij / max((Σ_I W H_I H_I^T + γ1 W)_ij, ε)`.
pub fn mur_step_w(problem: &Problem, factors: &Factorization) -> Array2<f64> {
    let r = problem.rank();
    let mut gram = coefficient_gram(&factors.h, r);
    for k in 0..r {
        gram[[k, k]] += problem.params().gamma1;
    }
    let den = factors.w.dot(&gram);
    let mut num = Array2::<f64>::zeros(factors.w.raw_dim());
    for (x, h) in problem.dataset().views().iter().zip(&factors.h) {
        num += &x.dot(&h.t());
    }
    apply_ratio(&factors.w, &num, &den)
}

/// `h_ij ← h_ij (W^T X_I + λ1/2 H_I S_I + λ2/2 Σ_J H_J M_J)_ij / max(((W^T W + γ2 1 1^T) H_I)_ij, ε)`.
pub fn mur_step_h(problem: &Problem, factors: &Factorization, view: usize) -> Array2<f64> {
    let p = problem.params();
    let h = &factors.h[view];
    let den = basis_gram(&factors.w, p.gamma2).dot(h);
    let mut num = factors.w.t().dot(problem.view(view));
    if p.lambda1 != 0.0 {
        if let Some(s) = problem.within_sum(view) {
            num.scaled_add(0.5 * p.lambda1, &h.dot(s));
        }
    }
    if p.lambda2 != 0.0 {
        if let Some(c) = between_pull(problem, &factors.h, view) {
            num.scaled_add(0.5 * p.lambda2, &c);
        }
    }
    apply_ratio(h, &num, &den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConstraintSet, Hyperparameters, MultiViewDataset};
    use ndarray::array;

    #[test]
    fn zero_entries_stay_zero() {
        let problem = Problem::new(
            MultiViewDataset::new(vec![array![[1.0, 2.0], [3.0, 4.0]]]).unwrap(),
            ConstraintSet::empty(1),
            Hyperparameters::new(2),
        )
        .unwrap();
        let f = Factorization {
            w: array![[0.0, 1.0], [0.5, 0.5]],
            h: vec![array![[1.0, 0.0], [0.3, 0.7]]],
        };
        let w = mur_step_w(&problem, &f);
        assert_eq!(w[[0, 0]], 0.0);
        let h = mur_step_h(&problem, &f, 0);
        assert_eq!(h[[0, 1]], 0.0);
    }

    #[test]
    fn fixed_point_at_exact_factorization() {
        let w = array![[1.0, 0.5], [0.2, 2.0], [0.0, 1.0]];
        let h = array![[0.3, 1.0, 0.4], [0.6, 0.1, 0.8]];
        let x = w.dot(&h);
        let problem = Problem::new(
            MultiViewDataset::new(vec![x]).unwrap(),
            ConstraintSet::empty(1),
            Hyperparameters::new(2),
        )
        .unwrap();
        let f = Factorization {
            w: w.clone(),
            h: vec![h.clone()],
        };
        let w1 = mur_step_w(&problem, &f);
        let h1 = mur_step_h(&problem, &f, 0);
        assert!((&w1 - &w).iter().all(|d| d.abs() <= 1e-12));
        assert!((&h1 - &h).iter().all(|d| d.abs() <= 1e-12));
    }
}
