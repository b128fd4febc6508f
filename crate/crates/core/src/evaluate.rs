//! Scoring learned factors against planted ones, and module extraction.

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{JmfError, Result};
use crate::linalg::residual_sq;
use crate::model::Factorization;
use crate::synthgen::GroundTruth;

/// Default z-score threshold for module membership.
pub const DEFAULT_Z_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// AUC over matched W and all H_I entries together.
    pub auc: f64,
    pub auc_w: f64,
    /// AUC of each matched H_I; `None` when a truth H0_I has a single class.
    pub auc_h: Vec<Option<f64>>,
    pub reconstruction_error: f64,
    /// `matching[k]` is the learned component paired with truth component `k`.
    pub matching: Vec<usize>,
}

fn pearson(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b.iter()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Correlation between every learned column `a` and truth column `b`:
/// entry `[b, a]`.
pub fn correlation_matrix(learned: &Array2<f64>, truth: &Array2<f64>) -> Result<Array2<f64>> {
    if learned.dim() != truth.dim() {
        return Err(JmfError::Shape(format!(
            "learned basis is {:?}, truth is {:?}",
            learned.dim(),
            truth.dim()
        )));
    }
    let r = truth.ncols();
    Ok(Array2::from_shape_fn((r, r), |(b, a)| {
        pearson(learned.column(a), truth.column(b))
    }))
}

/// Greedy matching of learned basis columns to truth columns: repeatedly
/// pair the unmatched couple with the highest Pearson correlation. Ties go
/// to the lowest truth index, then the lowest learned index.
pub fn match_components(learned: &Array2<f64>, truth: &Array2<f64>) -> Result<Vec<usize>> {
    let corr = correlation_matrix(learned, truth)?;
    let r = corr.nrows();
    let mut matching = vec![usize::MAX; r];
    let mut used = vec![false; r];
    for _ in 0..r {
        let mut best: Option<(usize, usize, f64)> = None;
        for b in (0..r).filter(|&b| matching[b] == usize::MAX) {
            for a in (0..r).filter(|&a| !used[a]) {
                let c = corr[[b, a]];
                if best.is_none_or(|(_, _, bc)| c > bc) {
                    best = Some((b, a, c));
                }
            }
        }
        let (b, a, _) = best.expect("an unmatched pair remains");
        matching[b] = a;
        used[a] = true;
    }
    Ok(matching)
}

/// Rank-based AUC (Mann-Whitney); tied scores share their average rank.
pub fn auc_score(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(JmfError::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(JmfError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));

    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share their mean
        let avg = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i]).count();
        rank_sum += avg * pos_in_group as f64;
        start = end;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// Learned factors reordered by `matching`, each W column and H_I row
/// divided by its maximum so that every component is scored on a common
/// scale.
pub fn aligned_scores(learned: &Factorization, matching: &[usize]) -> Factorization {
    let r = matching.len();
    let mut w = Array2::<f64>::zeros(learned.w.raw_dim());
    for (k, &a) in matching.iter().enumerate() {
        w.column_mut(k).assign(&learned.w.column(a));
    }
    for mut col in w.axis_iter_mut(Axis(1)) {
        let max = col.fold(0.0f64, |m, &v| m.max(v));
        if max > 0.0 {
            col /= max;
        }
    }
    let h = learned
        .h
        .iter()
        .map(|h| {
            let mut out = Array2::<f64>::zeros((r, h.ncols()));
            for (k, &a) in matching.iter().enumerate() {
                out.row_mut(k).assign(&h.row(a));
            }
            for mut row in out.axis_iter_mut(Axis(0)) {
                let max = row.fold(0.0f64, |m, &v| m.max(v));
                if max > 0.0 {
                    row /= max;
                }
            }
            out
        })
        .collect();
    Factorization { w, h }
}

fn flatten(scores: &Array2<f64>, truth: &Array2<f64>, s: &mut Vec<f64>, l: &mut Vec<bool>) {
    s.extend(scores.iter().copied());
    l.extend(truth.iter().map(|&v| v > 0.0));
}

/// Matches components on W, then scores the matched factors against the
/// binary ground truth.
pub fn evaluate(learned: &Factorization, truth: &GroundTruth) -> Result<EvalResult> {
    if learned.h.len() != truth.h0.len() {
        return Err(JmfError::Shape(format!(
            "{} learned views, {} truth views",
            learned.h.len(),
            truth.h0.len()
        )));
    }
    for (i, (h, h0)) in learned.h.iter().zip(&truth.h0).enumerate() {
        if h.dim() != h0.dim() {
            return Err(JmfError::Shape(format!(
                "H_{i} is {:?}, truth is {:?}",
                h.dim(),
                h0.dim()
            )));
        }
    }
    let matching = match_components(&learned.w, &truth.w0)?;
    let aligned = aligned_scores(learned, &matching);

    let (mut s, mut l) = (Vec::new(), Vec::new());
    flatten(&aligned.w, &truth.w0, &mut s, &mut l);
    let auc_w = auc_score(&s, &l)?;
    let mut auc_h = Vec::with_capacity(truth.h0.len());
    for (h, h0) in aligned.h.iter().zip(&truth.h0) {
        let (mut hs, mut hl) = (Vec::new(), Vec::new());
        flatten(h, h0, &mut hs, &mut hl);
        auc_h.push(auc_score(&hs, &hl).ok());
        s.extend(hs);
        l.extend(hl);
    }
    let auc = auc_score(&s, &l)?;

    let reconstruction_error = truth
        .x
        .iter()
        .zip(&learned.h)
        .map(|(x, h)| residual_sq(x, &learned.w, h))
        .sum();
    Ok(EvalResult {
        auc,
        auc_w,
        auc_h,
        reconstruction_error,
        matching,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleAssignment {
    pub threshold: f64,
    /// `modules[i][k]`: 0-based features of view `i` in component `k`.
    pub modules: Vec<Vec<Vec<usize>>>,
}

/// Features whose z-score within a coefficient row exceeds `threshold`.
/// Rows with zero spread give empty modules.
pub fn assign_modules(factors: &Factorization, threshold: f64) -> ModuleAssignment {
    let modules = factors
        .h
        .iter()
        .map(|h| {
            h.axis_iter(Axis(0))
                .map(|row| {
                    let n = row.len() as f64;
                    if row.is_empty() {
                        return Vec::new();
                    }
                    let mean = row.sum() / n;
                    let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    let sd = var.sqrt();
                    if !(sd > 0.0) {
                        return Vec::new();
                    }
                    row.iter()
                        .enumerate()
                        .filter(|(_, &v)| (v - mean) / sd > threshold)
                        .map(|(j, _)| j)
                        .collect()
                })
                .collect()
        })
        .collect();
    ModuleAssignment { threshold, modules }
}
