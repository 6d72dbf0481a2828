//! Versioned binary checkpoints: an 8-byte magic, a little-endian `u32`
//! format version, then the bincode-encoded payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ugc_contract_core::env::ContractEnv;
use ugc_contract_core::ppo::Trainer;

use crate::config::RunConfig;
use crate::error::{HarnessError, IoContext, Result};

pub const MAGIC: &[u8; 8] = b"UGCCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to continue a run exactly where it stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Effective configuration at save time, as TOML.
    pub config: String,
    pub trainer: Trainer,
    pub env: ContractEnv,
}

impl Checkpoint {
    pub fn new(config: &RunConfig, trainer: Trainer, env: ContractEnv) -> Self {
        Self { config: config.to_toml(), trainer, env }
    }

    pub fn config(&self) -> std::result::Result<RunConfig, String> {
        RunConfig::from_toml(&self.config)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 << 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        bincode::serialize_into(&mut out, self).expect("checkpoint payload is serializable");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err("not a checkpoint file (bad magic)".into());
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(format!("unsupported checkpoint version {version} (expected {FORMAT_VERSION})"));
        }
        bincode::deserialize(&bytes[12..]).map_err(|e| format!("corrupt payload: {e}"))
    }

    /// Writes through a temporary file so a crash never leaves a torn checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_bytes()).at(&tmp)?;
        fs::rename(&tmp, path).at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).at(path)?;
        Self::from_bytes(&bytes).map_err(|message| HarnessError::Checkpoint { path: path.to_path_buf(), message })
    }
}
