use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generalized advantage estimates and return targets.
///
/// `next_values[t]` is `V(s_{t+1})`; `episode_end[t]` stops the backward
/// recursion so advantages never leak across episodes.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    episode_end: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if n == 0 {
        return Err(Error::EmptyBuffer);
    }
    assert!(values.len() == n && next_values.len() == n && episode_end.len() == n);
    let mut adv = alloc::vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        if episode_end[t] {
            running = 0.0;
        }
        let delta = rewards[t] + gamma * next_values[t] - values[t];
        running = delta + gamma * lambda * running;
        adv[t] = running;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, ret))
}

/// On-policy trajectory storage for one update window.
///
/// Features are stored already normalized, exactly as the behavior policy
/// saw them, so importance ratios are computed on identical inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutBuffer {
    feature_dim: usize,
    action_dim: usize,
    capacity: usize,
    pub features: Vec<f64>,
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    /// `Some(V(s_T))` on the last step of an episode.
    pub terminal_values: Vec<Option<f64>>,
    pub values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(feature_dim: usize, action_dim: usize, capacity: usize) -> Self {
        Self {
            feature_dim,
            action_dim,
            capacity,
            features: Vec::with_capacity(capacity * feature_dim),
            actions: Vec::with_capacity(capacity * action_dim),
            log_probs: Vec::with_capacity(capacity),
            rewards: Vec::with_capacity(capacity),
            terminal_values: Vec::with_capacity(capacity),
            values: Vec::new(),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() >= self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn push(&mut self, features: &[f64], action: &[f64], log_prob: f64, reward: f64, terminal_value: Option<f64>) {
        assert_eq!(features.len(), self.feature_dim);
        assert_eq!(action.len(), self.action_dim);
        self.features.extend_from_slice(features);
        self.actions.extend_from_slice(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.terminal_values.push(terminal_value);
        self.advantages.clear();
        self.returns.clear();
    }

    pub fn is_finalized(&self) -> bool {
        !self.is_empty() && self.advantages.len() == self.len()
    }

    /// Fills advantages and return targets from state values `V(s_t)`;
    /// `bootstrap_value` is `V(s_{n})` after the last stored step when that
    /// step did not end an episode.
    pub fn finalize(&mut self, values: Vec<f64>, gamma: f64, lambda: f64, bootstrap_value: f64) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        assert_eq!(values.len(), self.len());
        let n = self.len();
        let next_values: Vec<f64> = (0..n)
            .map(|t| match self.terminal_values[t] {
                Some(v) => v,
                None if t + 1 < n => values[t + 1],
                None => bootstrap_value,
            })
            .collect();
        let ends: Vec<bool> = self.terminal_values.iter().map(Option::is_some).collect();
        let (adv, ret) = compute_gae(&self.rewards, &values, &next_values, &ends, gamma, lambda)?;
        self.values = values;
        self.advantages = adv;
        self.returns = ret;
        Ok(())
    }

    pub fn clear(&mut self) {
        self.features.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.rewards.clear();
        self.terminal_values.clear();
        self.values.clear();
        self.advantages.clear();
        self.returns.clear();
    }
}
