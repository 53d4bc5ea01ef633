//! Composite regression objective: an alpha-weighted blend of mean squared
//! error and mean Huber loss.

use super::NnError;

/// Huber term for one residual: quadratic within `delta`, linear beyond.
fn huber(e: f64, delta: f64) -> f64 {
    let a = e.abs();
    if a <= delta {
        0.5 * e * e
    } else {
        delta * (a - 0.5 * delta)
    }
}

fn huber_grad(e: f64, delta: f64) -> f64 {
    if e.abs() <= delta {
        e
    } else {
        delta * e.signum()
    }
}

/// `L = alpha * mean(e^2) + (1 - alpha) * mean(huber_delta(e))` with
/// `e = pred - target`; returns the loss and dL/dpred.
pub fn composite_loss(
    pred: &[f64],
    target: &[f64],
    alpha: f64,
    delta: f64,
) -> Result<(f64, Vec<f64>), NnError> {
    if pred.is_empty() || pred.len() != target.len() {
        return Err(NnError::EmptyBatch);
    }
    debug_assert!((0.0..=1.0).contains(&alpha));
    debug_assert!(delta > 0.0);
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (&p, &t) in pred.iter().zip(target) {
        let e = p - t;
        loss += alpha * e * e + (1.0 - alpha) * huber(e, delta);
        grad.push((alpha * 2.0 * e + (1.0 - alpha) * huber_grad(e, delta)) / n);
    }
    Ok((loss / n, grad))
}
