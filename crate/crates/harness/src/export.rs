//! Deployment-style contract export: one integer record per type, mirroring
//! the fields of an on-chain incentive contract.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ugc_contract_core::contract::{evaluate_menu, ContractMenu};
use ugc_contract_core::env::{ContractEnv, EnvState, Instance};

use crate::error::{HarnessError, IoContext, Result};

pub const EXPORT_SCHEMA_VERSION: u32 = 1;
/// Real values are multiplied by this factor and truncated toward zero.
pub const EXPORT_SCALE: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub id: u64,
    /// Address placeholder; filled in at deployment.
    pub recipient: String,
    /// Scaled quality `Q_k`.
    pub evaluation: u64,
    /// Scaled reward `R_k`.
    pub reward: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractExport {
    pub schema_version: u32,
    pub owner: String,
    pub scale: u64,
    /// Whether the scaled menu satisfies IR, IC and the quality floor.
    pub feasible: bool,
    /// Expected platform utility of the scaled menu (0 when infeasible).
    pub expected_utility: f64,
    pub records: Vec<ExportRecord>,
    /// The instance the menu was designed for, for re-checking.
    pub instance: Instance,
}

fn scale_value(v: f64, what: &str, k: usize) -> Result<u64> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(HarnessError::Export(format!("{what} of type {} is {v}; exported values must be nonnegative", k + 1)));
    }
    Ok((v * EXPORT_SCALE as f64).trunc() as u64)
}

fn unscale(v: u64, scale: u64) -> f64 {
    v as f64 / scale as f64
}

/// Menu represented by the integer records, converted back to real units.
pub fn scaled_menu(export: &ContractExport) -> Result<ContractMenu> {
    if export.scale == 0 {
        return Err(HarnessError::Export("scale must be positive".into()));
    }
    let q: Vec<f64> = export.records.iter().map(|r| unscale(r.evaluation, export.scale)).collect();
    let r: Vec<f64> = export.records.iter().map(|r| unscale(r.reward, export.scale)).collect();
    Ok(ContractMenu::from_parts(&q, &r)?)
}

/// Re-evaluates the scaled menu against its instance.
pub fn recheck(export: &ContractExport) -> Result<(bool, f64)> {
    let menu = scaled_menu(export)?;
    let inst = &export.instance;
    if menu.len() != inst.types() {
        return Err(HarnessError::Export(format!(
            "{} records for an instance with {} types",
            menu.len(),
            inst.types()
        )));
    }
    let ev = evaluate_menu(&menu, &inst.dist, &inst.grid, &inst.econ);
    Ok((ev.feasible, ev.reward))
}

/// Builds the export for `rewards` (already clamped) on the environment's
/// current instance.
pub fn build_export(env: &ContractEnv, rewards: &[f64], owner: &str) -> Result<ContractExport> {
    let inst = env.instance().clone();
    if rewards.len() != inst.types() {
        return Err(ugc_contract_core::Error::DimensionMismatch { expected: inst.types(), got: rewards.len() }.into());
    }
    let mut records = Vec::with_capacity(rewards.len());
    for (k, (&q, &r)) in inst.quality.iter().zip(rewards).enumerate() {
        records.push(ExportRecord {
            id: k as u64 + 1,
            recipient: format!("0x{:040x}", 0),
            evaluation: scale_value(q, "evaluation", k)?,
            reward: scale_value(r, "reward", k)?,
        });
    }
    let mut export = ContractExport {
        schema_version: EXPORT_SCHEMA_VERSION,
        owner: owner.to_string(),
        scale: EXPORT_SCALE,
        feasible: false,
        expected_utility: 0.0,
        records,
        instance: inst,
    };
    let (feasible, utility) = recheck(&export)?;
    export.feasible = feasible;
    export.expected_utility = utility;
    Ok(export)
}

/// Exports the greedy menu of `policy` on the environment's current instance.
pub fn export_contract<F>(env: &ContractEnv, policy: F, owner: &str) -> Result<ContractExport>
where
    F: FnOnce(&EnvState) -> Vec<f64>,
{
    let action = env.clamp_action(&policy(&env.state()));
    build_export(env, &action, owner)
}

pub fn write_export(path: &Path, export: &ContractExport) -> Result<()> {
    let text = serde_json::to_string_pretty(export).expect("export is serializable");
    fs::write(path, text + "\n").at(path)
}

pub fn read_export(path: &Path) -> Result<ContractExport> {
    let text = fs::read_to_string(path).at(path)?;
    let export: ContractExport =
        serde_json::from_str(&text).map_err(|e| HarnessError::Export(format!("{}: {e}", path.display())))?;
    if export.schema_version != EXPORT_SCHEMA_VERSION {
        return Err(HarnessError::Export(format!("unsupported schema version {}", export.schema_version)));
    }
    let mut ids: Vec<u64> = export.records.iter().map(|r| r.id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != export.records.len() {
        return Err(HarnessError::Export("duplicate record ids".into()));
    }
    Ok(export)
}
