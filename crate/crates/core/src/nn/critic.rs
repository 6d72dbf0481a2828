use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gemm::{matmul_nn, matmul_nt, matmul_tn};
use super::{accumulate_column_sums, add_bias, init_uniform};

/// State-value network: two Tanh hidden layers and a scalar head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Critic {
    input: usize,
    hidden: usize,
    params: Vec<f64>,
}

struct Layout {
    w1: Range<usize>,
    b1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
    w3: Range<usize>,
    b3: usize,
    len: usize,
}

fn layout(input: usize, hidden: usize) -> Layout {
    let w1 = 0..hidden * input;
    let b1 = w1.end..w1.end + hidden;
    let w2 = b1.end..b1.end + hidden * hidden;
    let b2 = w2.end..w2.end + hidden;
    let w3 = b2.end..b2.end + hidden;
    let b3 = w3.end;
    Layout { w1, b1, w2, b2, w3, b3, len: b3 + 1 }
}

/// Activations kept for the backward pass.
struct Forward {
    h1: Vec<f64>,
    h2: Vec<f64>,
    values: Vec<f64>,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let l = layout(input, hidden);
        let mut params = vec![0.0; l.len];
        init_uniform(&mut params[l.w1.clone()], input, rng);
        init_uniform(&mut params[l.b1.clone()], input, rng);
        init_uniform(&mut params[l.w2.clone()], hidden, rng);
        init_uniform(&mut params[l.b2.clone()], hidden, rng);
        init_uniform(&mut params[l.w3.clone()], hidden, rng);
        init_uniform(&mut params[l.b3..l.b3 + 1], hidden, rng);
        Self { input, hidden, params }
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, xs: &[f64], n: usize) -> Forward {
        let (d, h) = (self.input, self.hidden);
        let l = layout(d, h);
        let p = &self.params;
        let mut h1 = vec![0.0; n * h];
        matmul_nt(xs, &p[l.w1], &mut h1, n, d, h, 0.0);
        add_bias(&mut h1, &p[l.b1]);
        h1.iter_mut().for_each(|v| *v = libm::tanh(*v));
        let mut h2 = vec![0.0; n * h];
        matmul_nt(&h1, &p[l.w2], &mut h2, n, h, h, 0.0);
        add_bias(&mut h2, &p[l.b2]);
        h2.iter_mut().for_each(|v| *v = libm::tanh(*v));
        let mut values = vec![0.0; n];
        matmul_nt(&h2, &p[l.w3], &mut values, n, h, 1, 0.0);
        values.iter_mut().for_each(|v| *v += p[l.b3]);
        Forward { h1, h2, values }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.forward(x, 1).values[0]
    }

    /// Values for `n` row-major feature vectors.
    pub fn values(&self, xs: &[f64], n: usize) -> Vec<f64> {
        assert_eq!(xs.len(), n * self.input);
        self.forward(xs, n).values
    }

    /// `value_coef · mean((V(s) − target)²)` and its parameter gradient.
    pub fn loss_and_grad(&self, xs: &[f64], targets: &[f64], value_coef: f64) -> (f64, Vec<f64>) {
        let n = targets.len();
        assert_eq!(xs.len(), n * self.input);
        let (d, h) = (self.input, self.hidden);
        let l = layout(d, h);
        let p = &self.params;
        let fw = self.forward(xs, n);

        let mut loss = 0.0;
        let mut d_out = vec![0.0; n];
        for i in 0..n {
            let r = fw.values[i] - targets[i];
            loss += r * r;
            d_out[i] = 2.0 * value_coef * r / n as f64;
        }
        loss *= value_coef / n as f64;

        let mut grad = vec![0.0; l.len];
        matmul_tn(&d_out, &fw.h2, &mut grad[l.w3.clone()], 1, n, h, 0.0);
        grad[l.b3] = d_out.iter().sum();

        let mut d2 = vec![0.0; n * h];
        matmul_nn(&d_out, &p[l.w3], &mut d2, n, 1, h, 0.0);
        for (g, a) in d2.iter_mut().zip(&fw.h2) {
            *g *= 1.0 - a * a;
        }
        matmul_tn(&d2, &fw.h1, &mut grad[l.w2.clone()], h, n, h, 0.0);
        accumulate_column_sums(&d2, &mut grad[l.b2.clone()]);

        let mut d1 = vec![0.0; n * h];
        matmul_nn(&d2, &p[l.w2], &mut d1, n, h, h, 0.0);
        for (g, a) in d1.iter_mut().zip(&fw.h1) {
            *g *= 1.0 - a * a;
        }
        matmul_tn(&d1, xs, &mut grad[l.w1.clone()], h, n, d, 0.0);
        accumulate_column_sums(&d1, &mut grad[l.b1.clone()]);

        (loss, grad)
    }
}

/// Mean squared error against `targets`, scaled by `value_coef`.
pub fn critic_loss(values: &[f64], targets: &[f64], value_coef: f64) -> f64 {
    assert_eq!(values.len(), targets.len());
    if values.is_empty() {
        return 0.0;
    }
    let sse: f64 = values.iter().zip(targets).map(|(v, t)| (v - t) * (v - t)).sum();
    value_coef * sse / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Critic, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let critic = Critic::new(5, 16, &mut rng);
        let n = 7;
        let xs: Vec<f64> = (0..n * 5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ts: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..3.0)).collect();
        (critic, xs, ts)
    }

    #[test]
    fn loss_examples() {
        assert_eq!(critic_loss(&[1.0, 2.0], &[1.0, 2.0], 0.5), 0.0);
        assert!((critic_loss(&[1.5, 2.5, 0.5], &[1.0, 2.0, 0.0], 0.5) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn batched_loss_matches_naive_loop() {
        let (critic, xs, ts) = setup();
        let (loss, _) = critic.loss_and_grad(&xs, &ts, 0.5);
        let mut naive = 0.0;
        for (i, t) in ts.iter().enumerate() {
            let v = critic.value(&xs[i * 5..(i + 1) * 5]);
            naive += (v - t) * (v - t);
        }
        naive *= 0.5 / ts.len() as f64;
        assert!((loss - naive).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (critic, xs, ts) = setup();
        let (_, grad) = critic.loss_and_grad(&xs, &ts, 0.5);
        let h = 1e-5;
        for i in 0..critic.params().len() {
            let mut plus = critic.clone();
            plus.params_mut()[i] += h;
            let mut minus = critic.clone();
            minus.params_mut()[i] -= h;
            let fd = (plus.loss_and_grad(&xs, &ts, 0.5).0 - minus.loss_and_grad(&xs, &ts, 0.5).0)
                / (2.0 * h);
            let denom = grad[i].abs().max(fd.abs()).max(1e-6);
            assert!((grad[i] - fd).abs() / denom < 1e-4, "param {i}: {} vs {fd}", grad[i]);
        }
    }
}
