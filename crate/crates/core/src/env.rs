//! The contract-design environment the learner interacts with.
//!
//! Observations use a fixed layout of length `3K + 3`:
//!
//! ```text
//! [ Q_1 .. Q_K | I | κ | K | δ_1 .. δ_K | φ_1 .. φ_K ]
//! ```
//!
//! Actions are the `K` rewards `R_1 .. R_K`, clamped to `[0, R_max]`.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contract::{
    evaluate_menu, quantize_types, type_probabilities, ContractMenu, Economics, Evaluation,
    TypeDistribution, TypeGrid,
};
use crate::error::{Error, Result};
use crate::quality::{simulate_quality, SimulatorConfig};

/// A parameter drawn uniformly from `[low, high)`, or fixed when `low == high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRange {
    pub low: f64,
    pub high: f64,
}

impl ParamRange {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub const fn fixed(value: f64) -> Self {
        Self { low: value, high: value }
    }

    pub fn is_fixed(&self) -> bool {
        self.low == self.high
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    fn valid(&self) -> bool {
        self.low.is_finite() && self.high.is_finite() && self.low <= self.high
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_fixed() {
            self.low
        } else {
            rng.random_range(self.low..self.high)
        }
    }
}

/// How the observation evolves between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeMode {
    /// Fresh economic parameters and quality scores at every step.
    #[default]
    Redraw,
    /// One instance drawn at seeding time and kept for every step.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    /// Weight on the user's reward.
    pub f: f64,
    pub kappa: ParamRange,
    pub eta: ParamRange,
    /// Quality threshold `I`.
    pub quality_threshold: f64,
    /// Number of reputation types `K`.
    pub types: usize,
    pub phi_min: ParamRange,
    pub phi_max: ParamRange,
    pub alpha: ParamRange,
    pub beta: ParamRange,
    /// Upper bound of each reward component.
    pub reward_max: f64,
    /// Steps per episode `T`.
    pub horizon: usize,
    pub episode_mode: EpisodeMode,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            f: 1.0,
            kappa: ParamRange::new(1.0, 3.0),
            eta: ParamRange::new(5.0, 10.0),
            quality_threshold: 0.0,
            types: 2,
            phi_min: ParamRange::new(5.0, 10.0),
            phi_max: ParamRange::new(10.0, 15.0),
            alpha: ParamRange::new(1.0, 2.0),
            beta: ParamRange::new(1.0, 2.0),
            reward_max: 20.0,
            horizon: 64,
            episode_mode: EpisodeMode::Redraw,
        }
    }
}

impl EnvConfig {
    pub fn state_dim(&self) -> usize {
        3 * self.types + 3
    }

    pub fn action_dim(&self) -> usize {
        self.types
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("env: {msg}")));
        if self.types < 2 {
            return bad("types (K) must be >= 2");
        }
        if !(self.f > 0.0) {
            return bad("f must be > 0");
        }
        for (name, r) in [
            ("kappa", self.kappa),
            ("eta", self.eta),
            ("phi_min", self.phi_min),
            ("phi_max", self.phi_max),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !r.valid() {
                return bad(&format!("{name} range must satisfy low <= high"));
            }
        }
        if !(self.kappa.low > 0.0) || !(self.eta.low > 0.0) {
            return bad("kappa and eta must be > 0");
        }
        if !(self.alpha.low > 0.0) || !(self.beta.low > 0.0) {
            return bad("alpha and beta must be > 0");
        }
        let separated = self.phi_min.high < self.phi_max.low
            || (self.phi_min.high == self.phi_max.low && !self.phi_min.is_fixed());
        if !separated {
            return bad("phi_min range must lie below phi_max range");
        }
        if !(self.reward_max > 0.0) || !self.reward_max.is_finite() {
            return bad("reward_max must be > 0");
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1");
        }
        if !self.quality_threshold.is_finite() {
            return bad("quality_threshold must be finite");
        }
        Ok(())
    }
}

/// One fully drawn environment instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub econ: Economics,
    pub phi_min: f64,
    pub phi_max: f64,
    pub alpha: f64,
    pub beta: f64,
    pub grid: TypeGrid,
    pub dist: TypeDistribution,
    pub quality: Vec<f64>,
}

impl Instance {
    /// Draws κ, η, reputation bounds, beta shapes and quality scores, in that order.
    pub fn draw<R: Rng + ?Sized>(
        config: &EnvConfig,
        simulator: &SimulatorConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let kappa = config.kappa.sample(rng);
        let eta = config.eta.sample(rng);
        let phi_min = config.phi_min.sample(rng);
        let phi_max = config.phi_max.sample(rng);
        let alpha = config.alpha.sample(rng);
        let beta = config.beta.sample(rng);
        let grid = quantize_types(phi_min, phi_max, config.types)?;
        let dist = type_probabilities(&grid, alpha, beta)?;
        let quality = simulate_quality(&grid, config.quality_threshold, simulator, rng).scores;
        Ok(Self {
            econ: Economics {
                f: config.f,
                kappa,
                eta,
                threshold: config.quality_threshold,
            },
            phi_min,
            phi_max,
            alpha,
            beta,
            grid,
            dist,
            quality,
        })
    }

    pub fn types(&self) -> usize {
        self.grid.len()
    }

    pub fn state(&self) -> EnvState {
        let k = self.types();
        let mut v = Vec::with_capacity(3 * k + 3);
        v.extend_from_slice(&self.quality);
        v.push(self.econ.threshold);
        v.push(self.econ.kappa);
        v.push(k as f64);
        v.extend_from_slice(self.dist.delta());
        v.extend_from_slice(self.grid.phi());
        EnvState(v)
    }

    pub fn menu(&self, rewards: &[f64]) -> Result<ContractMenu> {
        ContractMenu::from_parts(&self.quality, rewards)
    }

    /// Evaluates a reward schedule exactly as given (no clamping).
    pub fn evaluate(&self, rewards: &[f64]) -> Result<Evaluation> {
        let menu = self.menu(rewards)?;
        Ok(evaluate_menu(&menu, &self.dist, &self.grid, &self.econ))
    }
}

/// Observation vector; see the module docs for its layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState(pub Vec<f64>);

impl EnvState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn types(&self) -> usize {
        (self.0.len() - 3) / 3
    }

    pub fn quality(&self) -> &[f64] {
        &self.0[..self.types()]
    }

    pub fn threshold(&self) -> f64 {
        self.0[self.types()]
    }

    pub fn kappa(&self) -> f64 {
        self.0[self.types() + 1]
    }

    pub fn delta(&self) -> &[f64] {
        let k = self.types();
        &self.0[k + 3..2 * k + 3]
    }

    pub fn phi(&self) -> &[f64] {
        let k = self.types();
        &self.0[2 * k + 3..]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub reward: f64,
    pub next_state: EnvState,
    pub done: bool,
    pub feasible: bool,
}

/// Seeded environment. Owns its RNG; clones evolve independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractEnv {
    config: EnvConfig,
    simulator: SimulatorConfig,
    rng: ChaCha8Rng,
    instance: Instance,
    step_in_episode: usize,
}

impl ContractEnv {
    pub fn new(config: EnvConfig, simulator: SimulatorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        simulator.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let instance = Instance::draw(&config, &simulator, &mut rng)?;
        Ok(Self {
            config,
            simulator,
            rng,
            instance,
            step_in_episode: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn simulator(&self) -> &SimulatorConfig {
        &self.simulator
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn state(&self) -> EnvState {
        self.instance.state()
    }

    fn redraw(&mut self) {
        // Config was validated at construction, so drawing cannot fail.
        self.instance = Instance::draw(&self.config, &self.simulator, &mut self.rng)
            .expect("validated config yields a valid instance");
    }

    /// Reseeds the generator and draws a new instance.
    pub fn reset_with_seed(&mut self, seed: u64) -> EnvState {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.redraw();
        self.step_in_episode = 0;
        self.state()
    }

    /// Starts a new episode from the current generator state. Frozen
    /// environments keep their instance.
    pub fn reset(&mut self) -> EnvState {
        if self.config.episode_mode == EpisodeMode::Redraw {
            self.redraw();
        }
        self.step_in_episode = 0;
        self.state()
    }

    /// Moves to the next instance without taking an action: redraws in
    /// redraw mode, no-op when frozen.
    pub fn advance(&mut self) {
        if self.config.episode_mode == EpisodeMode::Redraw {
            self.redraw();
        }
    }

    /// Clamps the action to `[0, R_max]` componentwise.
    pub fn clamp_action(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .map(|&a| if a.is_nan() { 0.0 } else { a.clamp(0.0, self.config.reward_max) })
            .collect()
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if action.len() != self.config.types {
            return Err(Error::DimensionMismatch {
                expected: self.config.types,
                got: action.len(),
            });
        }
        let rewards = self.clamp_action(action);
        let ev = self.instance.evaluate(&rewards)?;
        self.step_in_episode += 1;
        let done = self.step_in_episode >= self.config.horizon;
        if self.config.episode_mode == EpisodeMode::Redraw {
            self.redraw();
        }
        Ok(StepOutcome {
            reward: ev.reward,
            next_state: self.state(),
            done,
            feasible: ev.feasible,
        })
    }
}
