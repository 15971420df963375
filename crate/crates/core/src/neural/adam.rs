//! Adam optimizer with bias correction, plus component-wise gradient
//! clipping.

use crate::error::{Error, Result};
use crate::neural::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Number of updates applied so far.
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl Adam {
    /// Fresh optimizer state with zero moments shaped like `params`.
    pub fn new(learning_rate: f64, params: &[&Tensor]) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: params.iter().map(|t| Tensor::zeros(t.shape())).collect(),
            v: params.iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    /// One bias-corrected update:
    /// `w -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn update(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch(format!(
                "adam has {} slots, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for (slot, (p, g)) in params.iter_mut().zip(grads.iter()).enumerate() {
            if p.shape() != self.m[slot].shape() || g.shape() != self.m[slot].shape() {
                return Err(Error::ShapeMismatch(format!(
                    "adam slot {slot}: param {:?}, grad {:?}, moment {:?}",
                    p.shape(),
                    g.shape(),
                    self.m[slot].shape()
                )));
            }
            let m = self.m[slot].data_mut();
            let v = self.v[slot].data_mut();
            let pd = p.data_mut();
            let gd = g.data();
            for k in 0..gd.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * gd[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * gd[k] * gd[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                pd[k] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Clamps every gradient component to `[-threshold, threshold]`.
pub fn clip_gradients(grads: &mut [Tensor], threshold: f64) -> Result<()> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "clip threshold must be > 0, got {threshold}"
        )));
    }
    for g in grads {
        for v in g.data_mut() {
            *v = v.clamp(-threshold, threshold);
        }
    }
    Ok(())
}
