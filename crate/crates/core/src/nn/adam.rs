use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam with L2 weight decay folded into the gradient.
///
/// Parameters listed in `skip` for a step are left untouched: no decay,
/// no moment update, no step count. This is how experts that received no
/// gradient in a minibatch stay exactly where they were.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: Vec<u32>,
}

impl Adam {
    pub fn new(len: usize, lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            first: vec![0.0; len],
            second: vec![0.0; len],
            steps: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], skip: &[Range<usize>]) {
        assert_eq!(params.len(), self.first.len());
        assert_eq!(grad.len(), self.first.len());
        let mut skipped = vec![false; params.len()];
        for r in skip {
            skipped[r.clone()].iter_mut().for_each(|s| *s = true);
        }
        for i in 0..params.len() {
            if skipped[i] {
                continue;
            }
            let g = grad[i] + self.weight_decay * params[i];
            self.steps[i] += 1;
            let t = self.steps[i] as f64;
            self.first[i] = self.beta1 * self.first[i] + (1.0 - self.beta1) * g;
            self.second[i] = self.beta2 * self.second[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first[i] / (1.0 - libm::pow(self.beta1, t));
            let v_hat = self.second[i] / (1.0 - libm::pow(self.beta2, t));
            params[i] -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
    }
}

/// Rescales `grad` so its L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = libm::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
    if norm > max_norm {
        let scale = max_norm / (norm + 1e-6);
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

pub fn ensure_finite(grad: &[f64], what: &'static str) -> Result<()> {
    if grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteGradient(what))
    }
}
