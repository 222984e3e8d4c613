//! Losses and softmax. The landmark loss upweights the y axis (vertical
//! mouth motion carries the speech content); classification uses softmax
//! cross-entropy with the fused (p - onehot) backward.

use crate::error::{Error, Result};
use ndarray::Array2;

/// Row-wise softmax, stabilized by subtracting each row's max.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

fn l1_weights(cols: usize, y_weight: f64) -> Result<Vec<f64>> {
    if !(y_weight.is_finite() && y_weight >= 1.0) {
        return Err(Error::domain(format!("y weight must be >= 1, got {y_weight}")));
    }
    if cols % 3 != 0 {
        return Err(Error::structural(format!(
            "weighted L1 expects columns in (x, y, z) triples, got {cols} columns"
        )));
    }
    Ok((0..cols).map(|c| if c % 3 == 1 { y_weight } else { 1.0 }).collect())
}

/// Mean absolute error over all entries, with |dy| scaled by `y_weight`.
/// Rows are frames; columns are flattened (x, y, z) triples.
pub fn weighted_l1(pred: &Array2<f64>, target: &Array2<f64>, y_weight: f64) -> Result<f64> {
    Ok(weighted_l1_with_grad(pred, target, y_weight)?.0)
}

/// Loss plus its gradient with respect to `pred`.
pub fn weighted_l1_with_grad(
    pred: &Array2<f64>,
    target: &Array2<f64>,
    y_weight: f64,
) -> Result<(f64, Array2<f64>)> {
    if pred.dim() != target.dim() {
        return Err(Error::structural(format!(
            "weighted L1 shape mismatch: {:?} vs {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let weights = l1_weights(pred.ncols(), y_weight)?;
    let scale = 1.0 / (pred.nrows() * pred.ncols()) as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(pred.dim());
    for ((r, c), &p) in pred.indexed_iter() {
        let d = p - target[[r, c]];
        let w = weights[c];
        loss += w * d.abs();
        grad[[r, c]] = w * d.signum() * scale;
        if d == 0.0 {
            grad[[r, c]] = 0.0;
        }
    }
    if !loss.is_finite() {
        return Err(Error::numeric("weighted L1 produced a non-finite loss"));
    }
    Ok((loss * scale, grad))
}

/// Mean negative log-probability of the target classes: rows of `probs` are
/// probability vectors (softmax outputs), one target per row.
pub fn cross_entropy(probs: &Array2<f64>, targets: &[usize]) -> Result<f64> {
    if probs.nrows() != targets.len() {
        return Err(Error::structural(format!(
            "{} probability rows for {} targets",
            probs.nrows(),
            targets.len()
        )));
    }
    if probs.nrows() == 0 {
        return Err(Error::domain("cross-entropy of an empty batch"));
    }
    let mut total = 0.0;
    for (row, &t) in probs.rows().into_iter().zip(targets) {
        if t >= row.len() {
            return Err(Error::domain(format!(
                "target class {t} out of range for {} classes",
                row.len()
            )));
        }
        let p = row[t];
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::numeric(format!("probability {p} at the target class")));
        }
        total -= p.ln();
    }
    Ok(total / targets.len() as f64)
}

/// Softmax + cross-entropy in one step: returns (loss, probabilities,
/// d loss / d logits). The gradient is (p - onehot) / batch.
pub fn softmax_cross_entropy(
    logits: &Array2<f64>,
    targets: &[usize],
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    let probs = softmax(logits);
    let loss = cross_entropy(&probs, targets)?;
    let mut grad = probs.clone();
    let scale = 1.0 / targets.len() as f64;
    for (row, &t) in grad.rows_mut().into_iter().zip(targets).map(|(r, t)| (r, t)) {
        let mut row = row;
        row[t] -= 1.0;
        row.mapv_inplace(|v| v * scale);
    }
    Ok((loss, probs, grad))
}

/// Plain mean absolute error (the pose loss); equals weighted_l1 at weight 1
/// but places no (x, y, z) structure requirement on the columns.
pub fn mean_absolute_error(pred: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    if pred.dim() != target.dim() {
        return Err(Error::structural(format!(
            "MAE shape mismatch: {:?} vs {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let scale = 1.0 / (pred.nrows() * pred.ncols()) as f64;
    let diff = pred - target;
    let loss = diff.iter().map(|d| d.abs()).sum::<f64>() * scale;
    let grad = diff.mapv(|d| if d == 0.0 { 0.0 } else { d.signum() * scale });
    if !loss.is_finite() {
        return Err(Error::numeric("MAE produced a non-finite loss"));
    }
    Ok((loss, grad))
}

/// Mean squared error with gradient; the latent-keypoint regression loss.
pub fn mean_squared_error(pred: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    if pred.dim() != target.dim() {
        return Err(Error::structural(format!(
            "MSE shape mismatch: {:?} vs {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let scale = 1.0 / (pred.nrows() * pred.ncols()) as f64;
    let diff = pred - target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() * scale;
    let grad = diff.mapv(|d| 2.0 * d * scale);
    if !loss.is_finite() {
        return Err(Error::numeric("MSE produced a non-finite loss"));
    }
    Ok((loss, grad))
}
