//! Reference contract schemes: random and average heuristics, the
//! complete-information solution, and a brute-force grid-search optimum.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contract::{evaluate_menu, expected_platform_utility, ContractItem, ContractMenu, Evaluation, TypeGrid};
use crate::env::Instance;
use crate::error::{Error, Result};
use crate::policy::ActorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Random,
    Average,
    CompleteInfo,
    GridOracle,
    PlainPpo,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::Random,
        BaselineKind::Average,
        BaselineKind::CompleteInfo,
        BaselineKind::GridOracle,
        BaselineKind::PlainPpo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::Average => "average",
            BaselineKind::CompleteInfo => "complete_info",
            BaselineKind::GridOracle => "grid_oracle",
            BaselineKind::PlainPpo => "plain_ppo",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown baseline `{s}`")))
    }
}

/// Dense actor used for the plain PPO ablation.
pub fn plain_ppo_actor(hidden: usize) -> ActorConfig {
    ActorConfig::Mlp { hidden }
}

/// Each reward uniform on `[0, R_max]`, ignoring the state.
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, types: usize, reward_max: f64) -> Vec<f64> {
    (0..types).map(|_| rng.random_range(0.0..=reward_max)).collect()
}

/// The same item for every type, at the middle of the reward range.
pub fn average_policy(types: usize, reward_max: f64) -> Vec<f64> {
    vec![reward_max / 2.0; types]
}

/// Per-type rewards that leave every type exactly indifferent, `κQ_k/(fφ_k)`.
pub fn complete_info_rewards(quality: &[f64], grid: &TypeGrid, f: f64, kappa: f64) -> Result<Vec<f64>> {
    if quality.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: quality.len() });
    }
    quality
        .iter()
        .zip(grid.phi())
        .enumerate()
        .map(|(k, (&q, &phi))| {
            let div = f * phi;
            if div == 0.0 {
                Err(Error::ZeroDivisor(k))
            } else {
                Ok(kappa * q / div)
            }
        })
        .collect()
}

/// Complete-information scheme on an instance. IC is not imposed, so the
/// value is the unconstrained expected platform utility.
pub fn complete_info_evaluation(inst: &Instance) -> Result<Evaluation> {
    let rewards = complete_info_rewards(&inst.quality, &inst.grid, inst.econ.f, inst.econ.kappa)?;
    let menu = inst.menu(&rewards)?;
    let reward = expected_platform_utility(&menu, &inst.dist, inst.econ.eta, inst.econ.threshold)?;
    Ok(Evaluation { reward, feasible: true })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub rewards: Vec<f64>,
    pub value: f64,
}

pub const ORACLE_MAX_TYPES: usize = 3;
pub const ORACLE_MIN_RESOLUTION: usize = 50;

/// Exhaustive search over `resolution` evenly spaced rewards per type in
/// `[0, R_max]`. Ties keep the lexicographically first grid point.
pub fn grid_search_oracle(inst: &Instance, reward_max: f64, resolution: usize) -> Result<OracleResult> {
    let k = inst.types();
    if k > ORACLE_MAX_TYPES {
        return Err(Error::CombinatorialBlowup { k });
    }
    if resolution < ORACLE_MIN_RESOLUTION {
        return Err(Error::InvalidConfig(alloc::format!(
            "oracle resolution must be >= {ORACLE_MIN_RESOLUTION}, got {resolution}"
        )));
    }
    if !(reward_max >= 0.0) {
        return Err(Error::Domain(alloc::format!("reward_max must be >= 0, got {reward_max}")));
    }
    let levels: Vec<f64> = (0..resolution)
        .map(|j| reward_max * j as f64 / (resolution - 1) as f64)
        .collect();
    let mut menu = ContractMenu::new(inst.quality.iter().map(|&q| ContractItem::new(q, 0.0)).collect());
    let mut idx = vec![0usize; k];
    let mut best_idx = idx.clone();
    let mut best = f64::NEG_INFINITY;
    loop {
        for (item, &j) in menu.items.iter_mut().zip(&idx) {
            item.reward = levels[j];
        }
        let value = evaluate_menu(&menu, &inst.dist, &inst.grid, &inst.econ).reward;
        if value > best {
            best = value;
            best_idx.copy_from_slice(&idx);
        }
        // Odometer with the last type varying fastest: lexicographic order.
        let mut d = k;
        loop {
            if d == 0 {
                return Ok(OracleResult {
                    rewards: best_idx.iter().map(|&j| levels[j]).collect(),
                    value: best,
                });
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < resolution {
                break;
            }
            idx[d] = 0;
        }
    }
}
