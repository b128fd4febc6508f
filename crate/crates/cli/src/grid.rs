//! Grid search over the regularization weights.

use serde::{Deserialize, Serialize};

use crate::config::Weights;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub mean_auc: f64,
    pub mean_reconstruction_error: f64,
    /// Cells with a diverged run are never selected.
    pub diverged: usize,
}

impl GridCell {
    pub fn weights(&self) -> Weights {
        Weights {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
        }
    }
}

/// Mean AUCs within this distance count as equal.
pub const AUC_TIE: f64 = 1e-6;

/// Highest mean AUC; near-ties go to the smaller reconstruction error.
pub fn select_best(cells: &[GridCell]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in cells.iter().enumerate() {
        if c.diverged > 0 || !c.mean_auc.is_finite() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let bc = &cells[b];
                let wins = c.mean_auc > bc.mean_auc + AUC_TIE
                    || ((c.mean_auc - bc.mean_auc).abs() <= AUC_TIE
                        && c.mean_reconstruction_error < bc.mean_reconstruction_error);
                Some(if wins { i } else { b })
            }
        };
    }
    best
}
