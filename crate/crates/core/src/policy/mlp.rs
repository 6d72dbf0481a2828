use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gaussian_head, ActorBatch, ActorLoss, LossWeights, PolicyNet};
use crate::nn::gemm::{matmul_nn, matmul_nt, matmul_tn};
use crate::nn::{accumulate_column_sums, add_bias, init_uniform};

/// Monolithic actor: two Tanh hidden layers and a linear mean head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpPolicy {
    input: usize,
    hidden: usize,
    action: usize,
    params: Vec<f64>,
}

struct Layout {
    w1: Range<usize>,
    b1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
    w3: Range<usize>,
    b3: Range<usize>,
    log_std: Range<usize>,
}

impl MlpPolicy {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, action: usize, init_log_std: f64, rng: &mut R) -> Self {
        let mut p = Self { input, hidden, action, params: Vec::new() };
        let l = p.layout();
        p.params = vec![0.0; l.log_std.end];
        init_uniform(&mut p.params[l.w1], input, rng);
        init_uniform(&mut p.params[l.b1], input, rng);
        init_uniform(&mut p.params[l.w2], hidden, rng);
        init_uniform(&mut p.params[l.b2], hidden, rng);
        init_uniform(&mut p.params[l.w3], hidden, rng);
        init_uniform(&mut p.params[l.b3], hidden, rng);
        p.params[l.log_std].fill(init_log_std);
        p
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn layout(&self) -> Layout {
        let (d, h, a) = (self.input, self.hidden, self.action);
        let w1 = 0..h * d;
        let b1 = w1.end..w1.end + h;
        let w2 = b1.end..b1.end + h * h;
        let b2 = w2.end..w2.end + h;
        let w3 = b2.end..b2.end + a * h;
        let b3 = w3.end..w3.end + a;
        let log_std = b3.end..b3.end + a;
        Layout { w1, b1, w2, b2, w3, b3, log_std }
    }

    fn forward(&self, xs: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (d, h, a) = (self.input, self.hidden, self.action);
        let l = self.layout();
        let p = &self.params;
        let mut h1 = vec![0.0; n * h];
        matmul_nt(xs, &p[l.w1], &mut h1, n, d, h, 0.0);
        add_bias(&mut h1, &p[l.b1]);
        h1.iter_mut().for_each(|v| *v = libm::tanh(*v));
        let mut h2 = vec![0.0; n * h];
        matmul_nt(&h1, &p[l.w2], &mut h2, n, h, h, 0.0);
        add_bias(&mut h2, &p[l.b2]);
        h2.iter_mut().for_each(|v| *v = libm::tanh(*v));
        let mut out = vec![0.0; n * a];
        matmul_nt(&h2, &p[l.w3], &mut out, n, h, a, 0.0);
        add_bias(&mut out, &p[l.b3]);
        (h1, h2, out)
    }
}

impl PolicyNet for MlpPolicy {
    fn input_dim(&self) -> usize {
        self.input
    }

    fn action_dim(&self) -> usize {
        self.action
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn mean(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input, "feature dimension mismatch");
        self.forward(x, 1).2
    }

    fn actor_loss(&self, batch: &ActorBatch<'_>, w: &LossWeights) -> ActorLoss {
        let n = batch.len();
        let (d, h, a) = (self.input, self.hidden, self.action);
        let l = self.layout();
        let p = &self.params;
        let (h1, h2, means) = self.forward(batch.features, n);
        let head = gaussian_head(&means, self.log_std(), batch, w);

        let mut grad = vec![0.0; p.len()];
        matmul_tn(&head.d_mean, &h2, &mut grad[l.w3.clone()], a, n, h, 0.0);
        accumulate_column_sums(&head.d_mean, &mut grad[l.b3.clone()]);

        let mut d2 = vec![0.0; n * h];
        matmul_nn(&head.d_mean, &p[l.w3], &mut d2, n, a, h, 0.0);
        for (g, v) in d2.iter_mut().zip(&h2) {
            *g *= 1.0 - v * v;
        }
        matmul_tn(&d2, &h1, &mut grad[l.w2.clone()], h, n, h, 0.0);
        accumulate_column_sums(&d2, &mut grad[l.b2.clone()]);

        let mut d1 = vec![0.0; n * h];
        matmul_nn(&d2, &p[l.w2], &mut d1, n, h, h, 0.0);
        for (g, v) in d1.iter_mut().zip(&h1) {
            *g *= 1.0 - v * v;
        }
        matmul_tn(&d1, batch.features, &mut grad[l.w1.clone()], h, n, d, 0.0);
        accumulate_column_sums(&d1, &mut grad[l.b1.clone()]);

        grad[l.log_std].copy_from_slice(&head.d_log_std);

        ActorLoss {
            total: -head.surrogate - w.entropy_coef * head.entropy,
            surrogate: head.surrogate,
            balance: 0.0,
            entropy: head.entropy,
            grad,
            untouched: Vec::new(),
        }
    }
}
