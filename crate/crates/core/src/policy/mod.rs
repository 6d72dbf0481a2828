//! Diagonal-Gaussian actors and the PPO actor objective.
//!
//! Every actor stores its parameters in one flat vector whose last `A`
//! entries are the log standard deviations. The loss minimized by the
//! optimizer is
//!
//! ```text
//! loss = −surrogate + ω_MoE · Σ_i p_i ln p_i − ω_Ent · H[π]
//! ```
//!
//! where the gating term is only present for routed actors.

mod mlp;
mod moe;

pub use mlp::MlpPolicy;
pub use moe::{top_m_indices, top_m_renormalize, MoePolicy};

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// `ln N(a | μ, diag(exp(ω)²))`.
pub fn gaussian_log_prob(action: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((&a, &m), &w)| {
            let z = (a - m) / libm::exp(w);
            -0.5 * z * z - w - 0.5 * libm::log(2.0 * PI)
        })
        .sum()
}

/// Differential entropy of the diagonal Gaussian; independent of the mean.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std
        .iter()
        .map(|&w| w + 0.5 * (1.0 + libm::log(2.0 * PI)))
        .sum()
}

/// One sample's clipped surrogate term `min(ρA, clip(ρ, 1−ε, 1+ε)A)`.
pub fn surrogate_term(ratio: f64, advantage: f64, clip_eps: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    unclipped.min(clipped)
}

/// Mean clipped surrogate over a batch given new and old log-probabilities.
pub fn clipped_surrogate(new_log_probs: &[f64], old_log_probs: &[f64], advantages: &[f64], clip_eps: f64) -> f64 {
    assert_eq!(new_log_probs.len(), old_log_probs.len());
    assert_eq!(new_log_probs.len(), advantages.len());
    if advantages.is_empty() {
        return 0.0;
    }
    let total: f64 = new_log_probs
        .iter()
        .zip(old_log_probs)
        .zip(advantages)
        .map(|((&new, &old), &adv)| surrogate_term(libm::exp(new - old), adv, clip_eps))
        .sum();
    total / advantages.len() as f64
}

/// Negative mean Shannon entropy of a batch of gate distributions.
pub fn gating_balance_loss<P: AsRef<[f64]>>(batch: &[P]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let total: f64 = batch
        .iter()
        .map(|p| {
            p.as_ref()
                .iter()
                .filter(|&&q| q > 0.0)
                .map(|&q| q * libm::log(q))
                .sum::<f64>()
        })
        .sum();
    total / batch.len() as f64
}

/// Row-major minibatch view used by the actor objective.
#[derive(Debug, Clone, Copy)]
pub struct ActorBatch<'a> {
    pub features: &'a [f64],
    pub actions: &'a [f64],
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
}

impl ActorBatch<'_> {
    pub fn len(&self) -> usize {
        self.advantages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.advantages.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub clip_eps: f64,
    pub moe_coef: f64,
    pub entropy_coef: f64,
}

/// Loss terms and the gradient of `total` with respect to the flat parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorLoss {
    pub total: f64,
    pub surrogate: f64,
    /// `Σ p ln p` averaged over the batch (zero for unrouted actors).
    pub balance: f64,
    /// Mean Gaussian policy entropy.
    pub entropy: f64,
    pub grad: Vec<f64>,
    /// Parameter ranges that received no gradient in this batch.
    pub untouched: Vec<Range<usize>>,
}

/// A stochastic policy `N(μ(x), diag(exp(ω)²))` with trainable `μ` and `ω`.
pub trait PolicyNet {
    fn input_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    /// Mean action for one feature vector.
    fn mean(&self, x: &[f64]) -> Vec<f64>;

    /// Loss and gradient over a minibatch.
    fn actor_loss(&self, batch: &ActorBatch<'_>, weights: &LossWeights) -> ActorLoss;

    /// Entropy of the router's full distribution, for actors that route.
    fn gate_entropy(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn log_std(&self) -> &[f64] {
        let p = self.params();
        &p[p.len() - self.action_dim()..]
    }

    /// Draws an action and returns it with its log density (before any clamping).
    fn sample_action<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> (Vec<f64>, f64) {
        let mean = self.mean(x);
        let log_std = self.log_std();
        let action: Vec<f64> = mean
            .iter()
            .zip(log_std)
            .map(|(&m, &w)| {
                let z: f64 = StandardNormal.sample(rng);
                m + libm::exp(w) * z
            })
            .collect();
        let lp = gaussian_log_prob(&action, &mean, log_std);
        (action, lp)
    }

    fn log_prob(&self, x: &[f64], action: &[f64]) -> f64 {
        gaussian_log_prob(action, &self.mean(x), self.log_std())
    }
}

/// Actor architecture selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActorConfig {
    /// Routed linear experts: `experts` in total, `selected` active per input.
    Moe {
        #[serde(default = "default_experts")]
        experts: usize,
        #[serde(default = "default_selected")]
        selected: usize,
    },
    /// Dense two-layer Tanh network.
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: usize,
    },
}

fn default_experts() -> usize {
    3
}

fn default_selected() -> usize {
    1
}

fn default_hidden() -> usize {
    64
}

impl ActorConfig {
    pub fn validate(&self) -> crate::Result<()> {
        match *self {
            ActorConfig::Moe { experts, selected } if selected == 0 || selected > experts => {
                Err(crate::Error::InvalidSelection { m: selected, experts })
            }
            ActorConfig::Mlp { hidden: 0 } => Err(crate::Error::InvalidConfig("policy: hidden width must be >= 1".into())),
            _ => Ok(()),
        }
    }
}

impl Default for ActorConfig {
    fn default() -> Self {
        ActorConfig::Moe { experts: default_experts(), selected: default_selected() }
    }
}

/// Concrete actor, either routed or dense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Actor {
    Moe(MoePolicy),
    Mlp(MlpPolicy),
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(
        config: ActorConfig,
        input: usize,
        action: usize,
        init_log_std: f64,
        rng: &mut R,
    ) -> crate::Result<Self> {
        Ok(match config {
            ActorConfig::Moe { experts, selected } => {
                Actor::Moe(MoePolicy::new(input, action, experts, selected, init_log_std, rng)?)
            }
            ActorConfig::Mlp { hidden } => Actor::Mlp(MlpPolicy::new(input, hidden, action, init_log_std, rng)),
        })
    }

    pub fn as_moe(&self) -> Option<&MoePolicy> {
        match self {
            Actor::Moe(p) => Some(p),
            Actor::Mlp(_) => None,
        }
    }
}

macro_rules! delegate {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            Actor::Moe($p) => $e,
            Actor::Mlp($p) => $e,
        }
    };
}

impl PolicyNet for Actor {
    fn input_dim(&self) -> usize {
        delegate!(self, p => p.input_dim())
    }
    fn action_dim(&self) -> usize {
        delegate!(self, p => p.action_dim())
    }
    fn params(&self) -> &[f64] {
        delegate!(self, p => p.params())
    }
    fn params_mut(&mut self) -> &mut [f64] {
        delegate!(self, p => p.params_mut())
    }
    fn mean(&self, x: &[f64]) -> Vec<f64> {
        delegate!(self, p => p.mean(x))
    }
    fn actor_loss(&self, batch: &ActorBatch<'_>, weights: &LossWeights) -> ActorLoss {
        delegate!(self, p => p.actor_loss(batch, weights))
    }
    fn gate_entropy(&self, x: &[f64]) -> Option<f64> {
        delegate!(self, p => p.gate_entropy(x))
    }
}

/// Gaussian-head part of the actor loss, shared by all actors.
pub(crate) struct HeadTerms {
    pub surrogate: f64,
    pub entropy: f64,
    /// `∂loss/∂μ`, row-major `n×A`.
    pub d_mean: Vec<f64>,
    /// `∂loss/∂ω`.
    pub d_log_std: Vec<f64>,
}

pub(crate) fn gaussian_head(means: &[f64], log_std: &[f64], batch: &ActorBatch<'_>, w: &LossWeights) -> HeadTerms {
    let n = batch.len();
    let a_dim = log_std.len();
    let inv_n = 1.0 / n as f64;
    let sigma: Vec<f64> = log_std.iter().map(|&v| libm::exp(v)).collect();
    let mut d_mean = vec![0.0; n * a_dim];
    let mut d_log_std = vec![0.0; a_dim];
    let mut surrogate = 0.0;
    for b in 0..n {
        let mu = &means[b * a_dim..(b + 1) * a_dim];
        let act = &batch.actions[b * a_dim..(b + 1) * a_dim];
        let lp = gaussian_log_prob(act, mu, log_std);
        let ratio = libm::exp(lp - batch.old_log_probs[b]);
        let adv = batch.advantages[b];
        surrogate += surrogate_term(ratio, adv, w.clip_eps);
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - w.clip_eps, 1.0 + w.clip_eps) * adv;
        // d(−surrogate/n)/d(log π): the clipped branch is constant in θ.
        let d_lp = if unclipped <= clipped { -unclipped * inv_n } else { 0.0 };
        if d_lp == 0.0 {
            continue;
        }
        for k in 0..a_dim {
            let z = (act[k] - mu[k]) / sigma[k];
            d_mean[b * a_dim + k] = d_lp * z / sigma[k];
            d_log_std[k] += d_lp * (z * z - 1.0);
        }
    }
    surrogate *= inv_n;
    let entropy = gaussian_entropy(log_std);
    for g in d_log_std.iter_mut() {
        *g -= w.entropy_coef;
    }
    HeadTerms { surrogate, entropy, d_mean, d_log_std }
}
