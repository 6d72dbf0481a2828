use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use ugc_contract_core::baselines::{
    average_policy, complete_info_evaluation, grid_search_oracle, plain_ppo_actor, random_policy, BaselineKind,
    OracleResult,
};
use ugc_contract_core::env::ContractEnv;
use ugc_contract_core::policy::{ActorConfig, PolicyNet};
use ugc_contract_core::ppo::{evaluate_scheme, EvalSummary, Trainer};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{HarnessError, IoContext, Result};
use crate::metrics::{read_metrics, summarize, MetricsRecord, MetricsWriter, RunSummary, TimingWriter};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const SUMMARY_FILE: &str = "summary.json";
pub const EVAL_FILE: &str = "eval_summary.json";

/// Random-baseline draws use their own stream of the run seed.
const RANDOM_BASELINE_STREAM: u64 = 21;

pub fn build_env(cfg: &RunConfig) -> Result<ContractEnv> {
    Ok(ContractEnv::new(cfg.env.clone(), cfg.oracle.simulator, cfg.run.seed)?)
}

pub fn build_trainer(cfg: &RunConfig) -> Result<Trainer> {
    build_trainer_with(cfg, cfg.policy.actor)
}

fn build_trainer_with(cfg: &RunConfig, actor: ActorConfig) -> Result<Trainer> {
    Ok(Trainer::new(cfg.env.state_dim(), cfg.env.action_dim(), actor, cfg.policy.hyper, cfg.run.seed)?)
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Continue from `checkpoint.bin` in the output directory if present.
    pub resume: bool,
    /// Stop (with a checkpoint) after this many episodes in this call.
    pub stop_after: Option<usize>,
    /// Echo progress lines to stderr.
    pub verbose: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub records: Vec<MetricsRecord>,
    pub summary: RunSummary,
    pub checkpoint: PathBuf,
    pub trainer: Trainer,
    pub env: ContractEnv,
}

fn check_compatible(cfg: &RunConfig, trainer: &Trainer) -> Result<()> {
    let (d, a) = (trainer.actor.input_dim(), trainer.actor.action_dim());
    if d != cfg.env.state_dim() || a != cfg.env.action_dim() {
        return Err(HarnessError::Incompatible(format!(
            "policy expects state/action dims {d}/{a}, config gives {}/{}",
            cfg.env.state_dim(),
            cfg.env.action_dim()
        )));
    }
    Ok(())
}

/// Trains per `cfg`, appending one metrics row per episode and writing a
/// checkpoint every `eval_interval` episodes and at the end.
pub fn run_train(cfg: &RunConfig, opts: &TrainOptions) -> Result<TrainOutcome> {
    let dir = &cfg.run.output_dir;
    cfg.write_effective(dir)?;
    let metrics_path = dir.join(METRICS_FILE);
    let ckpt_path = dir.join(CHECKPOINT_FILE);

    let (mut trainer, mut env, mut records) = if opts.resume && ckpt_path.exists() {
        let ck = Checkpoint::load(&ckpt_path)?;
        check_compatible(cfg, &ck.trainer)?;
        let done = ck.trainer.episodes_done();
        let mut rows = if metrics_path.exists() { read_metrics(&metrics_path)? } else { Vec::new() };
        // Rows written after the checkpoint will be regenerated identically.
        rows.retain(|r| r.episode <= done);
        if rows.len() != done {
            return Err(HarnessError::Metrics(format!(
                "metrics log has {} rows but the checkpoint is at episode {done}",
                rows.len()
            )));
        }
        (ck.trainer, ck.env, rows)
    } else {
        (build_trainer(cfg)?, build_env(cfg)?, Vec::new())
    };

    let mut writer = MetricsWriter::create(&metrics_path, &records)?;
    let mut timing = TimingWriter::open(dir.join(TIMING_FILE), trainer.episodes_done())?;
    let plan = cfg.eval_plan();
    let start = Instant::now();
    let mut this_call = 0usize;
    while trainer.episodes_done() < cfg.run.episodes {
        if opts.stop_after.is_some_and(|n| this_call >= n) {
            break;
        }
        let log = trainer.train_episode(&mut env, &plan)?;
        this_call += 1;
        let rec = MetricsRecord::from(&log);
        writer.append(&rec)?;
        timing.append(rec.episode, start.elapsed().as_secs_f64())?;
        if opts.verbose && (rec.test_reward.is_some() || rec.episode == cfg.run.episodes) {
            eprintln!(
                "episode {:>6}  train {:>9.4}  test {}",
                rec.episode,
                rec.train_reward,
                rec.test_reward.map_or("-".to_string(), |t| format!("{t:.4}"))
            );
        }
        records.push(rec);
        if cfg.run.eval_interval > 0 && log.episode % cfg.run.eval_interval == 0 {
            Checkpoint::new(cfg, trainer.clone(), env.clone()).save(&ckpt_path)?;
        }
    }
    Checkpoint::new(cfg, trainer.clone(), env.clone()).save(&ckpt_path)?;
    let summary = summarize(&records, cfg.run.smoothing_window);
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(TrainOutcome { records, summary, checkpoint: ckpt_path, trainer, env })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summary is serializable");
    fs::write(path, text + "\n").at(path)
}

/// Greedy evaluation of a trained policy on the config's test seeds.
pub fn evaluate_trainer(cfg: &RunConfig, trainer: &Trainer, episodes: usize) -> Result<EvalSummary> {
    check_compatible(cfg, trainer)?;
    let env = build_env(cfg)?;
    Ok(trainer.evaluate_greedy(&env, cfg.run.test_seed, episodes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: String,
    #[serde(flatten)]
    pub summary: EvalSummary,
}

pub fn run_eval(checkpoint: &Path, cfg: &RunConfig, episodes: usize) -> Result<EvalReport> {
    let ck = Checkpoint::load(checkpoint)?;
    let summary = evaluate_trainer(cfg, &ck.trainer, episodes)?;
    let report = EvalReport { scheme: "policy".into(), summary };
    fs::create_dir_all(&cfg.run.output_dir).at(&cfg.run.output_dir)?;
    write_json(&cfg.run.output_dir.join(EVAL_FILE), &report)?;
    Ok(report)
}

/// Evaluates a fixed scheme on the config's test seeds. `plain_ppo`
/// first trains a dense actor with the config's budget.
pub fn run_baseline(kind: BaselineKind, cfg: &RunConfig, episodes: usize) -> Result<EvalReport> {
    let env = build_env(cfg)?;
    let seed = cfg.run.test_seed;
    let k = cfg.env.types;
    let r_max = cfg.env.reward_max;
    let summary = match kind {
        BaselineKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
            rng.set_stream(RANDOM_BASELINE_STREAM);
            evaluate_scheme(&env, seed, episodes, |_, inst| {
                inst.evaluate(&random_policy(&mut rng, k, r_max)).expect("K rewards")
            })
        }
        BaselineKind::Average => {
            let rewards = average_policy(k, r_max);
            evaluate_scheme(&env, seed, episodes, |_, inst| inst.evaluate(&rewards).expect("K rewards"))
        }
        BaselineKind::CompleteInfo => {
            let mut failure = None;
            let s = evaluate_scheme(&env, seed, episodes, |_, inst| {
                complete_info_evaluation(inst).unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    Default::default()
                })
            });
            if let Some(e) = failure {
                return Err(e.into());
            }
            s
        }
        BaselineKind::GridOracle => {
            let res = cfg.run.oracle_resolution;
            let mut failure = None;
            let s = evaluate_scheme(&env, seed, episodes, |_, inst| match grid_search_oracle(inst, r_max, res) {
                Ok(o) => inst.evaluate(&o.rewards).expect("K rewards"),
                Err(e) => {
                    failure.get_or_insert(e);
                    Default::default()
                }
            });
            if let Some(e) = failure {
                return Err(e.into());
            }
            s
        }
        BaselineKind::PlainPpo => {
            let mut plain = cfg.clone();
            plain.policy.actor = plain_ppo_actor(cfg.policy.plain_hidden);
            plain.run.output_dir = cfg.run.output_dir.join("plain_ppo");
            let out = run_train(&plain, &TrainOptions::default())?;
            evaluate_trainer(cfg, &out.trainer, episodes)?
        }
    };
    let report = EvalReport { scheme: kind.to_string(), summary };
    fs::create_dir_all(&cfg.run.output_dir).at(&cfg.run.output_dir)?;
    write_json(&cfg.run.output_dir.join(format!("baseline_{kind}.json")), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quality: Vec<f64>,
    pub phi: Vec<f64>,
    pub delta: Vec<f64>,
    pub kappa: f64,
    pub eta: f64,
    pub resolution: usize,
    pub oracle: OracleResult,
    pub complete_info: f64,
}

/// Grid-search optimum and complete-information value on the instance the
/// run seed draws first.
pub fn run_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    let env = build_env(cfg)?;
    let inst = env.instance();
    let oracle = grid_search_oracle(inst, cfg.env.reward_max, cfg.run.oracle_resolution)?;
    Ok(OracleReport {
        quality: inst.quality.clone(),
        phi: inst.grid.phi().to_vec(),
        delta: inst.dist.delta().to_vec(),
        kappa: inst.econ.kappa,
        eta: inst.econ.eta,
        resolution: cfg.run.oracle_resolution,
        oracle,
        complete_info: complete_info_evaluation(inst)?.reward,
    })
}
