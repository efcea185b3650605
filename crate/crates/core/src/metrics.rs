//! Multi-label loss and evaluation: numerically stable BCE-with-logits and
//! rank-based (Mann-Whitney) ROC-AUC with midrank tie handling.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Evaluation summary over a node subset.
#[derive(Debug, Clone)]
pub struct EvalReport {
    /// Mean ROC-AUC over label columns with both classes present.
    pub mean_auc: f64,
    /// Per-label AUC; `None` marks single-class (excluded) columns.
    pub per_label_auc: Vec<Option<f64>>,
    /// BCE-with-logits loss over the same subset.
    pub loss: f64,
}

impl EvalReport {
    pub fn degenerate_labels(&self) -> usize {
        self.per_label_auc.iter().filter(|a| a.is_none()).count()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy with logits over `mask` rows and all label
/// columns, in the stable form max(z,0) − z·y + ln(1+exp(−|z|)).
///
/// Returns the loss and its gradient w.r.t. the logits (zero outside the
/// masked rows).
pub fn bce_with_logits<S: Scalar>(
    logits: &DenseMatrix<S>,
    labels: &DenseMatrix<S>,
    mask: &[usize],
) -> Result<(f64, DenseMatrix<S>)> {
    if logits.shape() != labels.shape() {
        return Err(Error::shape(
            "bce_with_logits",
            format!("{:?}", logits.shape()),
            format!("{:?}", labels.shape()),
        ));
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let c = logits.cols();
    let scale = 1.0 / (mask.len() * c) as f64;
    let mut loss = 0.0;
    let mut grad = DenseMatrix::zeros(logits.rows(), c);
    for &i in mask {
        for j in 0..c {
            let z = logits.get(i, j).as_f64();
            let y = labels.get(i, j).as_f64();
            loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
            grad.set(i, j, S::from_f64((sigmoid(z) - y) * scale));
        }
    }
    Ok((loss * scale, grad))
}

/// Rank-based ROC-AUC with midrank handling of tied scores.
///
/// `None` when the labels are single-class (AUC undefined).
pub fn roc_auc<S: Scalar>(scores: &[S], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "scores/labels length");
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].as_f64().total_cmp(&scores[b].as_f64()));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]].as_f64() == scores[order[i]].as_f64() {
            j += 1;
        }
        // midrank of the tie group occupying sorted positions i..j (1-based)
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let p = pos as f64;
    Some((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Per-column AUC over a node subset, its masked BCE loss, and the mean over
/// non-degenerate columns.
pub fn eval_report<S: Scalar>(
    logits: &DenseMatrix<S>,
    labels: &DenseMatrix<S>,
    mask: &[usize],
) -> Result<EvalReport> {
    let (loss, _) = bce_with_logits(logits, labels, mask)?;
    let c = logits.cols();
    let mut per_label_auc = Vec::with_capacity(c);
    let mut sum = 0.0;
    let mut valid = 0usize;
    for j in 0..c {
        let col_scores: Vec<S> = mask.iter().map(|&i| logits.get(i, j)).collect();
        let col_labels: Vec<bool> = mask.iter().map(|&i| labels.get(i, j) > S::from_f64(0.5)).collect();
        let auc = roc_auc(&col_scores, &col_labels);
        if let Some(a) = auc {
            sum += a;
            valid += 1;
        }
        per_label_auc.push(auc);
    }
    if valid == 0 {
        return Err(Error::InvalidConfig(
            "every label column is single-class on this subset; AUC undefined".into(),
        ));
    }
    Ok(EvalReport {
        mean_auc: sum / valid as f64,
        per_label_auc,
        loss,
    })
}
