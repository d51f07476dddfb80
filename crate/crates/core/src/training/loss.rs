use crate::error::{Error, Result};

const CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy; probabilities are clamped to `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::Shape {
            op: "bce_loss",
            left: (probs.len(), 1),
            right: (labels.len(), 1),
        });
    }
    if probs.is_empty() {
        return Err(Error::invalid("bce_loss over an empty batch"));
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(CLAMP, 1.0 - CLAMP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / probs.len() as f64)
}

/// Gradient of [`bce_loss`] with respect to the logits `z` where `p = σ(z)`.
pub fn bce_grad_logits(probs: &[f64], labels: &[u8]) -> Vec<f64> {
    let n = probs.len() as f64;
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| (p - f64::from(y)) / n)
        .collect()
}
