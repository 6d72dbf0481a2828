//! Proximal policy optimization with GAE, clipped surrogate updates and
//! Adam, driving any [`PolicyNet`](crate::policy::PolicyNet) actor.

mod buffer;
mod normalizer;
mod trainer;

pub use buffer::{compute_gae, RolloutBuffer};
pub use normalizer::RunningNorm;
pub use trainer::{
    evaluate_scheme, train, EpisodeLog, EvalPlan, EvalSummary, Trainer, TrainingRecord, UpdateStats,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    /// Discount factor.
    pub gamma: f64,
    /// GAE bias/variance trade-off.
    pub lambda: f64,
    pub clip_eps: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Weight of the gating balance term.
    pub moe_coef: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Transitions collected between updates.
    pub steps_per_update: usize,
    pub minibatch_size: usize,
    pub epochs: usize,
    pub max_grad_norm: f64,
    pub weight_decay: f64,
    /// Width of both critic hidden layers.
    pub critic_hidden: usize,
    pub init_log_std: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            lambda: 0.95,
            clip_eps: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.05,
            moe_coef: 0.01,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            steps_per_update: 512,
            minibatch_size: 128,
            epochs: 10,
            max_grad_norm: 0.5,
            weight_decay: 1e-4,
            critic_hidden: 256,
            init_log_std: 0.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(alloc::format!("policy: {m}")));
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lambda) {
            return bad("gamma and lambda must lie in [0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return bad("clip_eps must be > 0");
        }
        for (name, lr) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr)] {
            if !(0.0..=1.0).contains(&lr) {
                return bad(&alloc::format!("{name} must lie in [0, 1]"));
            }
        }
        if self.steps_per_update == 0 || self.minibatch_size == 0 || self.critic_hidden == 0 {
            return bad("steps_per_update, minibatch_size and critic_hidden must be >= 1");
        }
        if !(self.max_grad_norm > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("max_grad_norm must be > 0 and weight_decay >= 0");
        }
        if !(self.value_coef >= 0.0 && self.entropy_coef >= 0.0 && self.moe_coef >= 0.0) {
            return bad("loss coefficients must be >= 0");
        }
        if !self.init_log_std.is_finite() {
            return bad("init_log_std must be finite");
        }
        Ok(())
    }
}
