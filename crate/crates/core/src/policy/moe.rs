//! Sparse mixture-of-experts actor: a linear softmax router picks the top-`m`
//! of `M` linear experts and mixes their outputs with renormalized weights.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gaussian_head, ActorBatch, ActorLoss, LossWeights, PolicyNet};
use crate::error::{Error, Result};
use crate::nn::init_uniform;

/// Indices of the `m` largest probabilities, ties resolved toward the lower index.
pub fn top_m_indices(p: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    // Stable sort keeps lower indices first among equal probabilities.
    idx.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap_or(core::cmp::Ordering::Equal));
    idx.truncate(m);
    idx.sort_unstable();
    idx
}

/// Keeps the `m` largest entries renormalized to sum to one; zeros elsewhere.
pub fn top_m_renormalize(p: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 || m > p.len() {
        return Err(Error::InvalidSelection { m, experts: p.len() });
    }
    let keep = top_m_indices(p, m);
    let total: f64 = keep.iter().map(|&i| p[i]).sum();
    let mut out = vec![0.0; p.len()];
    for &i in &keep {
        out[i] = p[i] / total;
    }
    Ok(out)
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(logits.iter().map(|&g| libm::exp(g - max)).sum::<f64>());
    logits.iter().map(|&g| g - lse).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoePolicy {
    input: usize,
    action: usize,
    experts: usize,
    selected: usize,
    params: Vec<f64>,
}

/// Per-sample forward quantities reused by the backward pass.
struct Routed {
    log_p: Vec<f64>,
    chosen: Vec<usize>,
    /// Renormalized weights of the chosen experts, aligned with `chosen`.
    weights: Vec<f64>,
    /// Outputs of the chosen experts, `chosen.len() × A`.
    outputs: Vec<f64>,
    mean: Vec<f64>,
}

impl MoePolicy {
    pub fn new<R: Rng + ?Sized>(
        input: usize,
        action: usize,
        experts: usize,
        selected: usize,
        init_log_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if selected == 0 || selected > experts {
            return Err(Error::InvalidSelection { m: selected, experts });
        }
        let len = experts * input + experts + experts * (action * input + action) + action;
        let mut p = Self {
            input,
            action,
            experts,
            selected,
            params: vec![0.0; len],
        };
        // The router starts at zero, i.e. a uniform gate.
        for i in 0..experts {
            let r = p.expert_range(i);
            init_uniform(&mut p.params[r], input, rng);
        }
        let ls = p.log_std_range();
        p.params[ls].iter_mut().for_each(|w| *w = init_log_std);
        Ok(p)
    }

    pub fn experts(&self) -> usize {
        self.experts
    }

    pub fn selected(&self) -> usize {
        self.selected
    }

    pub fn gate_weight_range(&self) -> Range<usize> {
        0..self.experts * self.input
    }

    pub fn gate_bias_range(&self) -> Range<usize> {
        let s = self.experts * self.input;
        s..s + self.experts
    }

    /// Weights (`A×d`) followed by bias (`A`) of expert `i`.
    pub fn expert_range(&self, i: usize) -> Range<usize> {
        let per = self.action * self.input + self.action;
        let s = self.experts * (self.input + 1) + i * per;
        s..s + per
    }

    pub fn log_std_range(&self) -> Range<usize> {
        let s = self.params.len() - self.action;
        s..self.params.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input {
            return Err(Error::DimensionMismatch { expected: self.input, got: x.len() });
        }
        Ok(())
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let w = &self.params[self.gate_weight_range()];
        let b = &self.params[self.gate_bias_range()];
        (0..self.experts)
            .map(|j| b[j] + dot(&w[j * self.input..(j + 1) * self.input], x))
            .collect()
    }

    /// `softmax(W_g x + b_g)`.
    pub fn gate_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(log_softmax(&self.logits(x)).into_iter().map(libm::exp).collect())
    }

    /// Output of expert `i` alone, `W_i x + b_i`.
    pub fn expert_output(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let r = self.expert_range(i);
        let p = &self.params[r];
        let (w, b) = p.split_at(self.action * self.input);
        (0..self.action)
            .map(|k| b[k] + dot(&w[k * self.input..(k + 1) * self.input], x))
            .collect()
    }

    /// Sparse-weighted mean action.
    pub fn policy_mean(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.route(x).mean)
    }

    fn route(&self, x: &[f64]) -> Routed {
        let log_p = log_softmax(&self.logits(x));
        let p: Vec<f64> = log_p.iter().map(|&l| libm::exp(l)).collect();
        let chosen = top_m_indices(&p, self.selected);
        // Renormalizing over the chosen set is a softmax restricted to it.
        let max = chosen.iter().map(|&i| log_p[i]).fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = chosen.iter().map(|&i| libm::exp(log_p[i] - max)).collect();
        let z: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|r| r / z).collect();
        let mut outputs = Vec::with_capacity(chosen.len() * self.action);
        let mut mean = vec![0.0; self.action];
        for (&i, &wt) in chosen.iter().zip(&weights) {
            let out = self.expert_output(i, x);
            for k in 0..self.action {
                mean[k] += wt * out[k];
            }
            outputs.extend_from_slice(&out);
        }
        Routed { log_p, chosen, weights, outputs, mean }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl PolicyNet for MoePolicy {
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
        self.route(x).mean
    }

    fn gate_entropy(&self, x: &[f64]) -> Option<f64> {
        let log_p = log_softmax(&self.logits(x));
        Some(-log_p.iter().map(|&l| libm::exp(l) * l).sum::<f64>())
    }

    fn actor_loss(&self, batch: &ActorBatch<'_>, w: &LossWeights) -> ActorLoss {
        let n = batch.len();
        let (d, a) = (self.input, self.action);
        let routed: Vec<Routed> = (0..n)
            .map(|b| self.route(&batch.features[b * d..(b + 1) * d]))
            .collect();
        let means: Vec<f64> = routed.iter().flat_map(|r| r.mean.iter().copied()).collect();
        let head = gaussian_head(&means, self.log_std(), batch, w);

        let mut grad = vec![0.0; self.params.len()];
        let mut used = vec![false; self.experts];
        let mut balance = 0.0;
        let gw = self.gate_weight_range();
        let gb = self.gate_bias_range();
        let inv_n = 1.0 / n as f64;

        for (b, r) in routed.iter().enumerate() {
            let x = &batch.features[b * d..(b + 1) * d];
            let d_mu = &head.d_mean[b * a..(b + 1) * a];
            let mut d_logits = vec![0.0; self.experts];

            // Mixture: μ = Σ_{i∈chosen} w_i E_i(x).
            let mut d_w = vec![0.0; r.chosen.len()];
            for (c, &i) in r.chosen.iter().enumerate() {
                used[i] = true;
                let out = &r.outputs[c * a..(c + 1) * a];
                d_w[c] = dot(d_mu, out);
                let er = self.expert_range(i);
                let g = &mut grad[er];
                let (gw_e, gb_e) = g.split_at_mut(a * d);
                for k in 0..a {
                    let de = r.weights[c] * d_mu[k];
                    if de == 0.0 {
                        continue;
                    }
                    gb_e[k] += de;
                    for (gj, xj) in gw_e[k * d..(k + 1) * d].iter_mut().zip(x) {
                        *gj += de * xj;
                    }
                }
            }
            let weighted: f64 = r.weights.iter().zip(&d_w).map(|(w, g)| w * g).sum();
            for (c, &i) in r.chosen.iter().enumerate() {
                d_logits[i] += r.weights[c] * (d_w[c] - weighted);
            }

            // Balance term over the full (pre-truncation) router distribution.
            let p: Vec<f64> = r.log_p.iter().map(|&l| libm::exp(l)).collect();
            let neg_entropy: f64 = p.iter().zip(&r.log_p).map(|(q, l)| q * l).sum();
            balance += neg_entropy;
            for j in 0..self.experts {
                d_logits[j] += w.moe_coef * inv_n * p[j] * (r.log_p[j] - neg_entropy);
            }

            for (j, &dl) in d_logits.iter().enumerate() {
                if dl == 0.0 {
                    continue;
                }
                grad[gb.start + j] += dl;
                let row = &mut grad[gw.start + j * d..gw.start + (j + 1) * d];
                for (gj, xj) in row.iter_mut().zip(x) {
                    *gj += dl * xj;
                }
            }
        }
        balance *= inv_n;

        let ls = self.log_std_range();
        grad[ls].copy_from_slice(&head.d_log_std);

        let untouched = (0..self.experts)
            .filter(|&i| !used[i])
            .map(|i| self.expert_range(i))
            .collect();
        ActorLoss {
            total: -head.surrogate + w.moe_coef * balance - w.entropy_coef * head.entropy,
            surrogate: head.surrogate,
            balance,
            entropy: head.entropy,
            grad,
            untouched,
        }
    }
}
