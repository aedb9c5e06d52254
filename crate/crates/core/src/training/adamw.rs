// SPDX-License-Identifier: MIT OR Apache-2.0

//! Adam with decoupled weight decay.

use crate::autodiff::ParamGrads;
use crate::models::ModelParams;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Optimizer state for one model.
#[derive(Clone, Debug)]
pub struct AdamW {
    lr: f64,
    weight_decay: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(model: &ModelParams, lr: f64, weight_decay: f64) -> Self {
        let zeros: Vec<Vec<f64>> = model
            .tensors
            .iter()
            .map(|t| vec![0.0; t.value.as_slice().len()])
            .collect();
        Self {
            lr,
            weight_decay,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// `θ ← θ − lr·(m̂ / (√v̂ + ε) + wd·θ)` for every tensor, embeddings included.
    pub fn update(&mut self, model: &mut ModelParams, grads: &ParamGrads) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        for (i, tensor) in model.tensors.iter_mut().enumerate() {
            let g = grads.tensors[i].as_slice();
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (k, theta) in tensor.value.as_mut_slice().iter_mut().enumerate() {
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                *theta -= self.lr * (m_hat / (v_hat.sqrt() + EPSILON) + self.weight_decay * *theta);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build, RunConfig};
    use crate::numerics::Matrix;

    #[test]
    fn zero_rate_and_decay_leave_parameters_unchanged() {
        let mut model = build(&RunConfig::transformer(0.5, 16, 1)).unwrap();
        let before = model.clone();
        let grads = ParamGrads {
            tensors: model.tensors.iter().map(|t| t.value.map(|v| v + 1.0)).collect(),
        };
        let mut opt = AdamW::new(&model, 0.0, 0.0);
        for _ in 0..5 {
            opt.update(&mut model, &grads);
        }
        assert_eq!(model, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With bias correction the first Adam step is lr·sign(g) (up to ε).
        let mut model = build(&RunConfig::linear(crate::models::Family::LinearAlpha, 4, 0)).unwrap();
        let before = model.clone();
        let grads = ParamGrads {
            tensors: model
                .tensors
                .iter()
                .map(|t| Matrix::filled(t.value.rows(), t.value.cols(), 0.5))
                .collect(),
        };
        let mut opt = AdamW::new(&model, 0.01, 0.0);
        opt.update(&mut model, &grads);
        for (a, b) in model.tensors.iter().zip(&before.tensors) {
            for (x, y) in a.value.as_slice().iter().zip(b.value.as_slice()) {
                assert!((y - x - 0.01).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn decay_is_decoupled_from_gradient() {
        let mut model = build(&RunConfig::linear(crate::models::Family::LinearAlpha, 4, 0)).unwrap();
        let before = model.clone();
        let grads = ParamGrads {
            tensors: model
                .tensors
                .iter()
                .map(|t| Matrix::zeros(t.value.rows(), t.value.cols()))
                .collect(),
        };
        let mut opt = AdamW::new(&model, 0.1, 2.0);
        opt.update(&mut model, &grads);
        for (a, b) in model.tensors.iter().zip(&before.tensors) {
            for (x, y) in a.value.as_slice().iter().zip(b.value.as_slice()) {
                assert!((x - y * 0.8).abs() < 1e-12);
            }
        }
    }
}
