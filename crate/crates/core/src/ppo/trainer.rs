use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HyperParams, RolloutBuffer, RunningNorm};
use crate::contract::Evaluation;
use crate::env::{ContractEnv, EnvState, EpisodeMode, Instance};
use crate::error::Result;
use crate::nn::adam::{clip_global_norm, ensure_finite, Adam};
use crate::nn::Critic;
use crate::policy::{Actor, ActorBatch, ActorConfig, LossWeights, PolicyNet};

const STREAM_INIT: u64 = 11;
const STREAM_SAMPLE: u64 = 12;
const STREAM_SHUFFLE: u64 = 13;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Averages over one update (all epochs and minibatches).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub surrogate: f64,
    pub balance: f64,
    pub entropy: f64,
    pub minibatches: usize,
}

/// Greedy-evaluation schedule used while training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPlan {
    /// Evaluate after every `interval` episodes; 0 disables evaluation.
    pub interval: usize,
    pub episodes: usize,
    pub seed: u64,
}

impl Default for EvalPlan {
    fn default() -> Self {
        Self { interval: 10, episodes: 4, seed: 0x5eed_e7a1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    /// 1-based episode index.
    pub episode: usize,
    /// Mean step reward over the episode.
    pub train_reward: f64,
    pub test_reward: Option<f64>,
    pub actor_loss: Option<f64>,
    pub critic_loss: Option<f64>,
    /// Mean router entropy over the episode, for routed actors.
    pub gating_entropy: Option<f64>,
    /// Environment steps taken so far, this episode included.
    pub total_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub episodes: Vec<EpisodeLog>,
}

/// Summary of a scheme's rewards over evaluation episodes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean: f64,
    pub std: f64,
    pub feasibility_rate: f64,
    /// Mean step reward of every episode.
    pub episode_rewards: Vec<f64>,
}

/// Runs `scheme` on `episodes` episodes of `env`'s horizon.
///
/// Redraw environments are reseeded with `seed + episode` so different
/// schemes see identical instances; frozen environments keep their instance.
pub fn evaluate_scheme<F>(env: &ContractEnv, seed: u64, episodes: usize, mut scheme: F) -> EvalSummary
where
    F: FnMut(&EnvState, &Instance) -> Evaluation,
{
    let mut env = env.clone();
    let horizon = env.config().horizon;
    let mut episode_rewards = Vec::with_capacity(episodes);
    let mut feasible = 0usize;
    for ep in 0..episodes {
        if env.config().episode_mode == EpisodeMode::Redraw {
            env.reset_with_seed(seed.wrapping_add(ep as u64));
        } else {
            env.reset();
        }
        let mut total = 0.0;
        for _ in 0..horizon {
            let ev = scheme(&env.state(), env.instance());
            total += ev.reward;
            feasible += ev.feasible as usize;
            env.advance();
        }
        episode_rewards.push(total / horizon as f64);
    }
    if episodes == 0 {
        return EvalSummary::default();
    }
    let n = episodes as f64;
    let mean = episode_rewards.iter().sum::<f64>() / n;
    let var = episode_rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    EvalSummary {
        episodes,
        mean,
        std: libm::sqrt(var),
        feasibility_rate: feasible as f64 / (n * horizon as f64),
        episode_rewards,
    }
}

/// Learner state: networks, optimizers, normalizer, partial rollout and RNGs.
/// Serializing a `Trainer` together with its environment captures
/// everything needed to resume bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trainer {
    pub actor: Actor,
    pub critic: Critic,
    pub normalizer: RunningNorm,
    pub hyper: HyperParams,
    actor_opt: Adam,
    critic_opt: Adam,
    buffer: RolloutBuffer,
    sample_rng: ChaCha8Rng,
    shuffle_rng: ChaCha8Rng,
    episodes_done: usize,
    steps_done: u64,
    last_update: Option<UpdateStats>,
}

impl Trainer {
    pub fn new(state_dim: usize, action_dim: usize, actor: ActorConfig, hyper: HyperParams, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut init = stream(seed, STREAM_INIT);
        let actor = Actor::new(actor, state_dim, action_dim, hyper.init_log_std, &mut init)?;
        let critic = Critic::new(state_dim, hyper.critic_hidden, &mut init);
        Ok(Self {
            actor_opt: Adam::new(actor.params().len(), hyper.actor_lr, hyper.weight_decay),
            critic_opt: Adam::new(critic.params().len(), hyper.critic_lr, hyper.weight_decay),
            buffer: RolloutBuffer::new(state_dim, action_dim, hyper.steps_per_update),
            normalizer: RunningNorm::new(state_dim),
            actor,
            critic,
            hyper,
            sample_rng: stream(seed, STREAM_SAMPLE),
            shuffle_rng: stream(seed, STREAM_SHUFFLE),
            episodes_done: 0,
            steps_done: 0,
            last_update: None,
        })
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    pub fn buffer(&self) -> &RolloutBuffer {
        &self.buffer
    }

    /// Mean action for a raw observation, with the normalizer frozen.
    pub fn greedy_action(&self, state: &EnvState) -> Vec<f64> {
        self.actor.mean(&self.normalizer.normalize(state.as_slice()))
    }

    /// Greedy reward of the current policy, clamped as the environment would.
    pub fn evaluate_greedy(&self, env: &ContractEnv, seed: u64, episodes: usize) -> EvalSummary {
        evaluate_scheme(env, seed, episodes, |state, inst| {
            let action = env.clamp_action(&self.greedy_action(state));
            inst.evaluate(&action).expect("action dimension matches K")
        })
    }

    /// Collects one episode, updating whenever the buffer fills, then runs
    /// the greedy evaluation if it is due.
    pub fn train_episode(&mut self, env: &mut ContractEnv, eval: &EvalPlan) -> Result<EpisodeLog> {
        let horizon = env.config().horizon;
        let mut state = env.reset();
        let mut total_reward = 0.0;
        let mut gate_entropy = 0.0;
        let mut routed = false;
        let mut update: Option<UpdateStats> = None;

        for _ in 0..horizon {
            self.normalizer.observe(state.as_slice());
            let x = self.normalizer.normalize(state.as_slice());
            if let Some(h) = self.actor.gate_entropy(&x) {
                gate_entropy += h;
                routed = true;
            }
            let (action, log_prob) = self.actor.sample_action(&x, &mut self.sample_rng);
            let outcome = env.step(&action)?;
            total_reward += outcome.reward;
            self.steps_done += 1;

            let next_x = self.normalizer.normalize(outcome.next_state.as_slice());
            let terminal_value = outcome.done.then(|| self.critic.value(&next_x));
            self.buffer.push(&x, &action, log_prob, outcome.reward, terminal_value);
            if self.buffer.is_full() {
                let bootstrap = terminal_value.unwrap_or_else(|| self.critic.value(&next_x));
                update = Some(self.update(bootstrap)?);
            }
            state = outcome.next_state;
            if outcome.done {
                break;
            }
        }
        self.episodes_done += 1;
        if update.is_some() {
            self.last_update = update;
        }

        let test_reward = (eval.interval > 0 && self.episodes_done % eval.interval == 0)
            .then(|| self.evaluate_greedy(env, eval.seed, eval.episodes).mean);
        Ok(EpisodeLog {
            episode: self.episodes_done,
            train_reward: total_reward / horizon as f64,
            test_reward,
            actor_loss: update.map(|u| u.actor_loss),
            critic_loss: update.map(|u| u.critic_loss),
            gating_entropy: routed.then(|| gate_entropy / horizon as f64),
            total_steps: self.steps_done,
        })
    }

    /// Finalizes the buffer and runs the clipped-surrogate epochs.
    pub fn update(&mut self, bootstrap_value: f64) -> Result<UpdateStats> {
        let n = self.buffer.len();
        let d = self.buffer.feature_dim();
        let a = self.buffer.action_dim();
        let values = self.critic.values(&self.buffer.features, n);
        self.buffer.finalize(values, self.hyper.gamma, self.hyper.lambda, bootstrap_value)?;

        let weights = LossWeights {
            clip_eps: self.hyper.clip_eps,
            moe_coef: self.hyper.moe_coef,
            entropy_coef: self.hyper.entropy_coef,
        };
        let mut stats = UpdateStats::default();
        let mut order: Vec<usize> = (0..n).collect();
        let mb = self.hyper.minibatch_size.min(n);
        let mut xs = Vec::with_capacity(mb * d);
        let mut acts = Vec::with_capacity(mb * a);
        let mut old_lp = Vec::with_capacity(mb);
        let mut adv = Vec::with_capacity(mb);
        let mut ret = Vec::with_capacity(mb);

        for _ in 0..self.hyper.epochs {
            order.shuffle(&mut self.shuffle_rng);
            for chunk in order.chunks(mb) {
                xs.clear();
                acts.clear();
                old_lp.clear();
                adv.clear();
                ret.clear();
                for &i in chunk {
                    xs.extend_from_slice(&self.buffer.features[i * d..(i + 1) * d]);
                    acts.extend_from_slice(&self.buffer.actions[i * a..(i + 1) * a]);
                    old_lp.push(self.buffer.log_probs[i]);
                    adv.push(self.buffer.advantages[i]);
                    ret.push(self.buffer.returns[i]);
                }
                let batch = ActorBatch {
                    features: &xs,
                    actions: &acts,
                    old_log_probs: &old_lp,
                    advantages: &adv,
                };
                let mut loss = self.actor.actor_loss(&batch, &weights);
                ensure_finite(&loss.grad, "actor")?;
                clip_global_norm(&mut loss.grad, self.hyper.max_grad_norm);
                self.actor_opt.step(self.actor.params_mut(), &loss.grad, &loss.untouched);

                let (critic_loss, mut cgrad) = self.critic.loss_and_grad(&xs, &ret, self.hyper.value_coef);
                ensure_finite(&cgrad, "critic")?;
                clip_global_norm(&mut cgrad, self.hyper.max_grad_norm);
                self.critic_opt.step(self.critic.params_mut(), &cgrad, &[]);

                stats.actor_loss += loss.total;
                stats.critic_loss += critic_loss;
                stats.surrogate += loss.surrogate;
                stats.balance += loss.balance;
                stats.entropy += loss.entropy;
                stats.minibatches += 1;
            }
        }
        if stats.minibatches > 0 {
            let k = stats.minibatches as f64;
            stats.actor_loss /= k;
            stats.critic_loss /= k;
            stats.surrogate /= k;
            stats.balance /= k;
            stats.entropy /= k;
        }
        self.buffer.clear();
        Ok(stats)
    }
}

/// Trains for `episodes` episodes and returns the per-episode log.
pub fn train(env: &mut ContractEnv, trainer: &mut Trainer, episodes: usize, eval: &EvalPlan) -> Result<TrainingRecord> {
    let mut record = TrainingRecord::default();
    for _ in 0..episodes {
        record.episodes.push(trainer.train_episode(env, eval)?);
    }
    Ok(record)
}
