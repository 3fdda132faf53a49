//! Eval-mode class probabilities.

use emocpd_autograd::{softmax_last_axis, Scalar, TensorError};

use super::dataset::Dataset;
use crate::net::Model;

/// Index of the largest entry, the lowest index on ties.
pub fn argmax<T: PartialOrd>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Softmax probabilities (one 20-vector per sample) computed in batches of
/// `batch` in eval mode.
pub fn predict<T: Scalar>(model: &Model<T>, data: &Dataset, batch: usize) -> Result<Vec<Vec<f64>>, TensorError> {
    let idx: Vec<usize> = (0..data.len()).collect();
    let k = model.config.classes;
    let mut out = Vec::with_capacity(data.len());
    for chunk in idx.chunks(batch.max(1)) {
        let (x, _) = data.batch::<T>(chunk);
        let probs = softmax_last_axis(&model.logits(x)?);
        out.extend(
            probs
                .data()
                .chunks(k)
                .map(|row| row.iter().map(|v| v.to_f64().expect("finite")).collect()),
        );
    }
    Ok(out)
}
