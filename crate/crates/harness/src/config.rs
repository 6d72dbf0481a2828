use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ugc_contract_core::env::EnvConfig;
use ugc_contract_core::policy::ActorConfig;
use ugc_contract_core::ppo::{EvalPlan, HyperParams};
use ugc_contract_core::quality::{PromptTemplate, SimulatorConfig};

use crate::error::{HarnessError, IoContext, Result};
use crate::evaluator::EndpointConfig;

pub const EFFECTIVE_CONFIG: &str = "config.effective.toml";

/// Complete description of one experiment. Every section and field is
/// optional in the file; omitted values take the defaults below.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub policy: PolicyConfig,
    pub oracle: OracleConfig,
    pub run: RunSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub actor: ActorConfig,
    pub hyper: HyperParams,
    /// Hidden width of the dense actor used by the plain PPO baseline.
    pub plain_hidden: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { actor: ActorConfig::default(), hyper: HyperParams::default(), plain_hidden: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub simulator: SimulatorConfig,
    pub prompt: PromptTemplate,
    /// External evaluator; only used by the `rate` command.
    pub endpoint: Option<EndpointConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Seeds the environment and the learner.
    pub seed: u64,
    pub episodes: usize,
    /// Greedy evaluation and checkpoint period in episodes; 0 checkpoints
    /// only at the end and never evaluates during training.
    pub eval_interval: usize,
    pub eval_episodes: usize,
    /// Instance seed for the periodic greedy evaluation.
    pub eval_seed: u64,
    /// Instance seed for `eval` and `baseline`, disjoint from training.
    pub test_seed: u64,
    pub test_episodes: usize,
    pub output_dir: PathBuf,
    pub smoothing_window: usize,
    pub oracle_resolution: usize,
    /// Owner recorded in contract exports.
    pub owner: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            episodes: 1000,
            eval_interval: 50,
            eval_episodes: 10,
            eval_seed: 1_000_000,
            test_seed: 2_000_000,
            test_episodes: 100,
            output_dir: PathBuf::from("runs/default"),
            smoothing_window: 10,
            oracle_resolution: 200,
            owner: "0x0000000000000000000000000000000000000000".to_string(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> ugc_contract_core::Result<()> {
        use ugc_contract_core::Error::InvalidConfig;
        self.env.validate()?;
        self.oracle.simulator.validate()?;
        self.oracle.prompt.validate()?;
        self.policy.actor.validate()?;
        self.policy.hyper.validate()?;
        if self.policy.plain_hidden == 0 {
            return Err(InvalidConfig("policy: plain_hidden must be >= 1".into()));
        }
        if let Some(ep) = &self.oracle.endpoint {
            ep.validate()?;
        }
        if self.run.smoothing_window == 0 {
            return Err(InvalidConfig("run: smoothing_window must be >= 1".into()));
        }
        if self.run.oracle_resolution < ugc_contract_core::baselines::ORACLE_MIN_RESOLUTION {
            return Err(InvalidConfig("run: oracle_resolution must be >= 50".into()));
        }
        Ok(())
    }

    pub fn eval_plan(&self) -> EvalPlan {
        EvalPlan {
            interval: self.run.eval_interval,
            episodes: self.run.eval_episodes,
            seed: self.run.eval_seed,
        }
    }

    /// Writes the effective configuration into `dir`.
    pub fn write_effective(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).at(dir)?;
        let path = dir.join(EFFECTIVE_CONFIG);
        fs::write(&path, self.to_toml()).at(&path)?;
        Ok(path)
    }
}

/// Reads, validates and fills defaults for a TOML run configuration.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).at(path)?;
    RunConfig::from_toml(&text).map_err(|message| HarnessError::Config { path: path.to_path_buf(), message })
}
