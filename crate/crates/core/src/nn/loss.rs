use alloc::vec::Vec;

use crate::{Error, Result};

/// Mean squared error `(1/N) Σ (y − ŷ)²` and its gradient `2(ŷ − y)/N`
/// with respect to the predictions.
pub fn mse_loss(pred: &[f32], target: &[f32]) -> Result<(f64, Vec<f32>)> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            op: "mse_loss",
            expected: pred.len(),
            got: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty("mse_loss"));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = f64::from(p) - f64::from(t);
            loss += d * d;
            (2.0 * d / n) as f32
        })
        .collect();
    Ok((loss / n, grad))
}
