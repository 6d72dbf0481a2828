use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Per-component running mean/variance (Welford) used to standardize
/// observations before they reach the networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

const CLIP: f64 = 10.0;
const VAR_EPS: f64 = 1e-8;

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self { count: 0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.m2.iter().map(|m| m / n).collect()
    }

    pub fn observe(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.mean.len());
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    /// `(x − mean)/sqrt(var + 1e-8)`, clipped to ±10.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        x.iter()
            .zip(&self.mean)
            .zip(&self.m2)
            .map(|((&v, &m), &s)| ((v - m) / libm::sqrt(s / n + VAR_EPS)).clamp(-CLIP, CLIP))
            .collect()
    }
}
