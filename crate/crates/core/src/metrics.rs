//! Imbalance-aware evaluation metrics.
//!
//! All metrics derive from [`ConfusionCounts`]; the positive class is 1.
//! Precision, recall, and F-scores use the zero-denominator convention
//! (0 when undefined), which penalizes degenerate predictors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// TP/FP/FN/TN tallies for binary predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

/// Flat metric report; `auc` is present only when scores were available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
}

impl MetricReport {
    /// Builds a report from hard predictions and, optionally, ranking scores
    /// for the AUC (skipped when only one class is present).
    pub fn from_predictions(
        labels: &[u8],
        predictions: &[u8],
        scores: Option<&[f64]>,
    ) -> Result<Self> {
        let c = confusion(labels, predictions)?;
        let (precision, recall, f1) = precision_recall_f1(&c);
        let auc = match scores {
            Some(s) => roc_auc(labels, s).ok(),
            None => None,
        };
        Ok(Self {
            accuracy: accuracy(labels, predictions)?,
            precision,
            recall,
            f1,
            auc,
        })
    }
}

fn check_binary(v: &[u8], what: &'static str) -> Result<()> {
    if v.iter().any(|&x| x > 1) {
        return Err(Error::InvalidParam(format!("{what} must be binary")));
    }
    Ok(())
}

/// Tallies label/prediction pairs into confusion counts.
pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionCounts> {
    if labels.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs predictions",
            left: labels.len(),
            right: predictions.len(),
        });
    }
    check_binary(labels, "labels")?;
    check_binary(predictions, "predictions")?;
    let mut c = ConfusionCounts {
        true_positives: 0,
        false_positives: 0,
        false_negatives: 0,
        true_negatives: 0,
    };
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y, p) {
            (1, 1) => c.true_positives += 1,
            (0, 1) => c.false_positives += 1,
            (1, 0) => c.false_negatives += 1,
            _ => c.true_negatives += 1,
        }
    }
    Ok(c)
}

/// Precision `TP/(TP+FP)`, recall `TP/(TP+FN)`, and their harmonic mean F1.
/// Each is 0 when its denominator is 0.
pub fn precision_recall_f1(c: &ConfusionCounts) -> (f64, f64, f64) {
    let tp = c.true_positives as f64;
    let precision = if c.true_positives + c.false_positives == 0 {
        0.0
    } else {
        tp / (tp + c.false_positives as f64)
    };
    let recall = if c.true_positives + c.false_negatives == 0 {
        0.0
    } else {
        tp / (tp + c.false_negatives as f64)
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// General F-score: `(1+β²)·P·R / (β²·P + R)`, 0 when the denominator is 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> Result<f64> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::InvalidParam(format!("beta must be > 0, got {beta}")));
    }
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + b2) * precision * recall / denom)
}

/// Fraction of positions where label equals prediction.
pub fn accuracy(labels: &[u8], predictions: &[u8]) -> Result<f64> {
    if labels.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs predictions",
            left: labels.len(),
            right: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("accuracy of zero samples"));
    }
    let correct = labels
        .iter()
        .zip(predictions)
        .filter(|(y, p)| y == p)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Area under the ROC curve by the rank statistic: the probability that a
/// random positive outscores a random negative, ties counted half.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs scores",
            left: labels.len(),
            right: scores.len(),
        });
    }
    check_binary(labels, "labels")?;
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidParam(
            "roc_auc requires both classes present".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Average ranks over tie groups, then the Mann-Whitney statistic.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j averaged over the group
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let n_pos = n_pos as f64;
    let n_neg = n_neg as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}
