use serde::{Deserialize, Serialize};

use crate::color::FitzpatrickType;

const K: usize = FitzpatrickType::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpMetrics {
    /// `confusion[gt][pred]`, zero-based type indices.
    pub confusion: [[u64; K]; K],
    pub balanced_accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub qw_kappa: f64,
}

/// Quadratic weighted kappa of a confusion matrix, weights `(i − j)² / (K − 1)²`.
///
/// When the chance-disagreement term vanishes (one class everywhere) the
/// value is 1 for perfect agreement and 0 otherwise.
pub fn quadratic_weighted_kappa(confusion: &[[u64; K]; K]) -> f64 {
    let n: u64 = confusion.iter().flatten().sum();
    if n == 0 {
        return 0.0;
    }
    let rows: Vec<f64> = confusion.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..K)
        .map(|j| confusion.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let nf = n as f64;
    let (mut observed, mut expected) = (0.0, 0.0);
    for i in 0..K {
        for j in 0..K {
            let w = ((i as f64 - j as f64) / (K - 1) as f64).powi(2);
            observed += w * confusion[i][j] as f64;
            expected += w * rows[i] * cols[j] / nf;
        }
    }
    if expected == 0.0 {
        return if observed == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - observed / expected
}

/// Confusion matrix and macro metrics. Averages run over the classes present
/// in `gt`; a class never predicted has precision 0.
pub fn fp_metrics(gt: &[FitzpatrickType], pred: &[FitzpatrickType]) -> crate::Result<FpMetrics> {
    if gt.len() != pred.len() {
        return Err(crate::Error::DimensionMismatch(format!(
            "{} ground-truth labels, {} predictions",
            gt.len(),
            pred.len()
        )));
    }
    if gt.is_empty() {
        return Err(crate::Error::InsufficientData("no labels to score".into()));
    }
    let mut confusion = [[0u64; K]; K];
    for (g, p) in gt.iter().zip(pred) {
        confusion[g.zero_based()][p.zero_based()] += 1;
    }
    let (mut prec, mut rec, mut f1, mut present) = (0.0, 0.0, 0.0, 0usize);
    for c in 0..K {
        let support: u64 = confusion[c].iter().sum();
        if support == 0 {
            continue;
        }
        present += 1;
        let tp = confusion[c][c] as f64;
        let predicted: u64 = confusion.iter().map(|r| r[c]).sum();
        let r = tp / support as f64;
        let p = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        rec += r;
        prec += p;
        f1 += if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    }
    let m = present as f64;
    Ok(FpMetrics {
        confusion,
        balanced_accuracy: rec / m,
        macro_precision: prec / m,
        macro_recall: rec / m,
        macro_f1: f1 / m,
        qw_kappa: quadratic_weighted_kappa(&confusion),
    })
}
