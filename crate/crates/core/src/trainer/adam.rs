use serde::{Deserialize, Serialize};

use crate::models::ParamStore;
use crate::scalar::Scalar;

/// Adam constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment buffers, one per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamStore<T>) -> Self {
        let zeros: Vec<Vec<T>> = params
            .entries()
            .iter()
            .map(|e| vec![T::zero(); e.tensor.len()])
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
        }
    }
}

/// One bias-corrected Adam update at step `t >= 1` using the gradients stored
/// on the parameter tensors. Tensors without a gradient buffer are treated as
/// having zero gradient. Gradients are left in place.
pub fn adam_step<T: Scalar>(params: &mut ParamStore<T>, state: &mut AdamState<T>, t: u64, lr: f64, cfg: &AdamConfig) {
    assert!(t >= 1, "adam step index starts at 1");
    let b1 = T::from_f64_lossy(cfg.beta1);
    let b2 = T::from_f64_lossy(cfg.beta2);
    let one = T::one();
    let c1 = T::from_f64_lossy(1.0 - cfg.beta1.powf(t as f64));
    let c2 = T::from_f64_lossy(1.0 - cfg.beta2.powf(t as f64));
    let lr = T::from_f64_lossy(lr);
    let eps = T::from_f64_lossy(cfg.epsilon);
    for (k, entry) in params.entries_mut().iter_mut().enumerate() {
        let Some(grad) = entry.tensor.grad.take() else {
            continue;
        };
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for (i, theta) in entry.tensor.data_mut().iter_mut().enumerate() {
            let g = grad[i];
            m[i] = b1 * m[i] + (one - b1) * g;
            v[i] = b2 * v[i] + (one - b2) * g * g;
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            *theta -= lr * mh / (vh.sqrt() + eps);
        }
        entry.tensor.grad = Some(grad);
    }
}
