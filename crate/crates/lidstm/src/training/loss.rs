//! Weighted cross-entropy over pooled logits.

use crate::float::Real;
use ndarray::Array1;

/// Weighted cross-entropy for one sample.
///
/// Computes `-w · log softmax(logits)[target]` with a numerically stable
/// log-softmax (max subtraction), and the gradient with respect to the
/// logits, `w · (softmax(logits) - onehot(target))`.
///
/// The weight scales both the loss and the gradient linearly; averaging
/// over a batch is the caller's job.
pub fn weighted_ce_loss<F: Real>(logits: &Array1<F>, target: usize, weight: F) -> (F, Array1<F>) {
    assert!(
        target < logits.len(),
        "target {} out of range for {} classes",
        target,
        logits.len()
    );
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let mut grad = logits.mapv(|z| (z - max).exp());
    let denom: F = grad.iter().copied().sum();
    let log_denom = denom.ln();
    // log softmax(target) = (z_t - max) - log Σ exp(z - max)
    let log_p = logits[target] - max - log_denom;
    let loss = -weight * log_p;
    grad.mapv_inplace(|e| weight * (e / denom));
    grad[target] -= weight;
    (loss, grad)
}
