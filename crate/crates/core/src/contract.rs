//! Contract-theoretic economics: reputation types, type probabilities,
//! user and platform utilities, and the IR/IC feasibility checks.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::beta_cdf;

/// Uniformly quantized reputation types `φ_1 < … < φ_K` on `[phi_min, phi_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeGrid {
    phi: Vec<f64>,
    phi_min: f64,
    phi_max: f64,
}

impl TypeGrid {
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.phi_min, self.phi_max)
    }

    /// Position of `phi` on `[0, 1]` relative to the reputation bounds.
    pub fn normalized(&self, phi: f64) -> f64 {
        (phi - self.phi_min) / (self.phi_max - self.phi_min)
    }
}

/// `φ_k = phi_min + ((k−1)/K)(phi_max − phi_min)` for `k = 1..=K`.
pub fn quantize_types(phi_min: f64, phi_max: f64, k: usize) -> Result<TypeGrid> {
    if !(phi_min < phi_max) || k < 2 || !phi_min.is_finite() || !phi_max.is_finite() {
        return Err(Error::InvalidBounds { phi_min, phi_max, k });
    }
    let span = phi_max - phi_min;
    let phi = (0..k)
        .map(|i| phi_min + (i as f64 / k as f64) * span)
        .collect();
    Ok(TypeGrid { phi, phi_min, phi_max })
}

/// Probability mass `δ_k` of each reputation type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeDistribution {
    delta: Vec<f64>,
}

impl TypeDistribution {
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }
}

/// Forward-differenced beta CDF over the type grid.
///
/// Reputation is mapped to `u = (φ − phi_min)/(phi_max − phi_min)` before the
/// CDF is applied, so `δ_k = F(u_{k+1}) − F(u_k)` and `δ_K = 1 − F(u_K)`.
pub fn type_probabilities(grid: &TypeGrid, alpha: f64, beta: f64) -> Result<TypeDistribution> {
    let cdf = grid
        .phi()
        .iter()
        .map(|&phi| beta_cdf(grid.normalized(phi).clamp(0.0, 1.0), alpha, beta))
        .collect::<Result<Vec<_>>>()?;
    let delta = (0..cdf.len())
        .map(|k| {
            let upper = cdf.get(k + 1).copied().unwrap_or(1.0);
            (upper - cdf[k]).max(0.0)
        })
        .collect();
    Ok(TypeDistribution { delta })
}

/// One contract item: required quality and the reward paid for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractItem {
    pub quality: f64,
    pub reward: f64,
}

impl ContractItem {
    pub fn new(quality: f64, reward: f64) -> Self {
        Self { quality, reward }
    }
}

/// The menu offered by the platform, one item per reputation type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractMenu {
    pub items: Vec<ContractItem>,
}

impl ContractMenu {
    pub fn new(items: Vec<ContractItem>) -> Self {
        Self { items }
    }

    /// Pairs quality scores with rewards positionally.
    pub fn from_parts(quality: &[f64], rewards: &[f64]) -> Result<Self> {
        if quality.len() != rewards.len() {
            return Err(Error::DimensionMismatch {
                expected: quality.len(),
                got: rewards.len(),
            });
        }
        Ok(Self {
            items: quality
                .iter()
                .zip(rewards)
                .map(|(&q, &r)| ContractItem::new(q, r))
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.items.iter().map(|it| it.reward)
    }
}

/// Economic coefficients shared by the utility functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Economics {
    /// Weight on the user's reward.
    pub f: f64,
    /// Unit cost of producing one unit of quality.
    pub kappa: f64,
    /// Platform utility coefficient.
    pub eta: f64,
    /// Quality threshold `I`.
    pub threshold: f64,
}

/// `f·φ·R − κ·Q`.
pub fn user_utility(phi: f64, item: ContractItem, f: f64, kappa: f64) -> f64 {
    f * phi * item.reward - kappa * item.quality
}

/// `η·ln((Q − I) + 1) − R`.
pub fn platform_utility(item: ContractItem, eta: f64, threshold: f64) -> Result<f64> {
    if !(item.quality >= threshold) {
        return Err(Error::QualityBelowThreshold {
            quality: item.quality,
            threshold,
        });
    }
    Ok(eta * libm::log1p(item.quality - threshold) - item.reward)
}

/// `Σ_k δ_k · U_P(item_k)`.
pub fn expected_platform_utility(
    menu: &ContractMenu,
    dist: &TypeDistribution,
    eta: f64,
    threshold: f64,
) -> Result<f64> {
    if menu.len() != dist.len() {
        return Err(Error::DimensionMismatch {
            expected: dist.len(),
            got: menu.len(),
        });
    }
    menu.items
        .iter()
        .zip(dist.delta())
        .try_fold(0.0, |acc, (&item, &delta)| {
            Ok(acc + delta * platform_utility(item, eta, threshold)?)
        })
}

/// Reduced individual rationality: only the lowest type needs a
/// nonnegative utility once IC holds.
pub fn check_ir(menu: &ContractMenu, grid: &TypeGrid, f: f64, kappa: f64) -> bool {
    debug_assert_eq!(menu.len(), grid.len());
    match (menu.items.first(), grid.phi().first()) {
        (Some(&item), Some(&phi)) => user_utility(phi, item, f, kappa) >= 0.0,
        _ => false,
    }
}

/// Incentive compatibility over every ordered pair of types, compared exactly.
pub fn check_ic(menu: &ContractMenu, grid: &TypeGrid, f: f64, kappa: f64) -> bool {
    debug_assert_eq!(menu.len(), grid.len());
    grid.phi().iter().zip(&menu.items).all(|(&phi, &own)| {
        let own_utility = user_utility(phi, own, f, kappa);
        menu.items
            .iter()
            .all(|&other| own_utility >= user_utility(phi, other, f, kappa))
    })
}

/// Whether every item meets the quality floor `Q_k ≥ I`.
pub fn check_quality_floor(menu: &ContractMenu, threshold: f64) -> bool {
    menu.items.iter().all(|it| it.quality >= threshold)
}

/// Result of evaluating one menu against the constraints.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Evaluation {
    pub reward: f64,
    pub feasible: bool,
}

/// Reward signal: expected platform utility when IR, IC and the quality
/// floor all hold, and exactly zero otherwise.
pub fn evaluate_menu(
    menu: &ContractMenu,
    dist: &TypeDistribution,
    grid: &TypeGrid,
    econ: &Economics,
) -> Evaluation {
    assert_eq!(menu.len(), grid.len(), "menu/grid dimension mismatch");
    assert_eq!(menu.len(), dist.len(), "menu/distribution dimension mismatch");
    let feasible = check_quality_floor(menu, econ.threshold)
        && check_ir(menu, grid, econ.f, econ.kappa)
        && check_ic(menu, grid, econ.f, econ.kappa);
    let reward = if feasible {
        // Quality floor already checked, so this cannot fail.
        expected_platform_utility(menu, dist, econ.eta, econ.threshold).unwrap_or(0.0)
    } else {
        0.0
    };
    Evaluation { reward, feasible }
}

/// Scalar form of [`evaluate_menu`].
pub fn env_reward(
    menu: &ContractMenu,
    dist: &TypeDistribution,
    grid: &TypeGrid,
    econ: &Economics,
) -> f64 {
    evaluate_menu(menu, dist, grid, econ).reward
}
