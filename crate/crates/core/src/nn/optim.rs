//! AdamW with decoupled weight decay, plus global-norm gradient clipping.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { lr: 1e-3, weight_decay: 1e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Per-parameter first/second moments over the flattened parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamWState {
    pub config: AdamWConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    pub step_count: u64,
}

impl AdamWState {
    pub fn new(param_count: usize, config: AdamWConfig) -> Self {
        AdamWState { config, m: vec![0.0; param_count], v: vec![0.0; param_count], step_count: 0 }
    }

    /// One update: `m = b1*m + (1-b1)*g`, `v = b2*v + (1-b2)*g^2`,
    /// bias-corrected, then
    /// `theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)`.
    /// Decay acts on the parameter directly, not через the gradient.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.step_count += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step_count as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step_count as i32);
        for ((p, &g), (m, v)) in
            params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= c.lr * (m_hat / (v_hat.sqrt() + c.epsilon) + c.weight_decay * *p);
        }
    }
}

/// Scale all gradients by `max_norm / norm` when the global L2 norm
/// exceeds `max_norm`. Returns the pre-clip norm. Zero gradients pass
/// through untouched.
pub fn clip_gradients(grads: &mut [f64], max_norm: f64) -> f64 {
    debug_assert!(max_norm > 0.0);
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}
