use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ugc_contract_core::baselines::BaselineKind;
use ugc_contract_core::env::ContractEnv;
use ugc_incentive::checkpoint::Checkpoint;
use ugc_incentive::evaluator::{evaluate_external, EndpointConfig};
use ugc_incentive::export::{export_contract, write_export};
use ugc_incentive::metrics::read_metrics;
use ugc_incentive::plot::{emit_plot_data, write_plot_data, DEFAULT_WINDOW};
use ugc_incentive::runner::{self, TrainOptions};
use ugc_incentive::stub::{StubEvaluator, StubReply};
use ugc_incentive::{load_config, HarnessError, Result};

#[derive(Parser)]
#[command(name = "ugc-incentive", version, about = "Train and evaluate incentive contracts for user-generated content")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy; writes metrics, timing, summary and checkpoints.
    Train {
        config: PathBuf,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Greedy evaluation of a checkpoint on the test seeds.
    Eval {
        checkpoint: PathBuf,
        config: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Evaluate a reference scheme: random, average, complete_info, grid_oracle, plain_ppo.
    Baseline {
        kind: BaselineKind,
        config: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Grid-search optimum on the first instance drawn by the run seed.
    Oracle { config: PathBuf },
    /// Export the greedy menu for one instance as contract records (JSON).
    Export {
        checkpoint: PathBuf,
        config: PathBuf,
        /// Instance seed; defaults to the test seed.
        #[arg(long)]
        instance_seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smoothed reward curves from a metrics log.
    PlotData {
        metrics: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate a content descriptor with the external evaluator.
    Rate { config: PathBuf, descriptor: String },
    /// Serve a local evaluator that always answers with `reply`.
    StubEvaluator {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long, default_value = "Rating: 7")]
        reply: String,
    },
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, resume, quiet } => {
            let cfg = load_config(&config)?;
            let out = runner::run_train(&cfg, &TrainOptions { resume, stop_after: None, verbose: !quiet })?;
            print_json(&out.summary);
            eprintln!("checkpoint: {}", out.checkpoint.display());
        }
        Command::Eval { checkpoint, config, episodes } => {
            let cfg = load_config(&config)?;
            let report = runner::run_eval(&checkpoint, &cfg, episodes.unwrap_or(cfg.run.test_episodes))?;
            let s = &report.summary;
            println!("greedy reward {:.4} ± {:.4} over {} episodes, feasibility {:.3}", s.mean, s.std, s.episodes, s.feasibility_rate);
        }
        Command::Baseline { kind, config, episodes } => {
            let cfg = load_config(&config)?;
            let report = runner::run_baseline(kind, &cfg, episodes.unwrap_or(cfg.run.test_episodes))?;
            let s = &report.summary;
            println!("{kind}: reward {:.4} ± {:.4} over {} episodes, feasibility {:.3}", s.mean, s.std, s.episodes, s.feasibility_rate);
        }
        Command::Oracle { config } => {
            let cfg = load_config(&config)?;
            print_json(&runner::run_oracle(&cfg)?);
        }
        Command::Export { checkpoint, config, instance_seed, out } => {
            let cfg = load_config(&config)?;
            let ck = Checkpoint::load(&checkpoint)?;
            let mut env = ContractEnv::new(cfg.env.clone(), cfg.oracle.simulator, cfg.run.seed)?;
            env.reset_with_seed(instance_seed.unwrap_or(cfg.run.test_seed));
            let export = export_contract(&env, |s| ck.trainer.greedy_action(s), &cfg.run.owner)?;
            if !export.feasible {
                eprintln!("warning: exported menu violates IR/IC or the quality floor");
            }
            let path = out.unwrap_or_else(|| cfg.run.output_dir.join("contract.json"));
            write_export(&path, &export)?;
            println!("{}", path.display());
        }
        Command::PlotData { metrics, window, out } => {
            let rows = emit_plot_data(&read_metrics(&metrics)?, window)?;
            let path = out.unwrap_or_else(|| metrics.with_file_name("plot_data.csv"));
            write_plot_data(&path, &rows)?;
            println!("{}", path.display());
        }
        Command::Rate { config, descriptor } => {
            let cfg = load_config(&config)?;
            let endpoint = EndpointConfig::from_env(cfg.oracle.endpoint.clone()).ok_or_else(|| {
                HarnessError::Config { path: config.clone(), message: "no evaluator endpoint configured".into() }
            })?;
            println!("{}", evaluate_external(&descriptor, &cfg.oracle.prompt, &endpoint)?);
        }
        Command::StubEvaluator { bind, reply } => {
            let stub = StubEvaluator::bind(&bind, move |_| StubReply::Text(reply.clone()))
                .map_err(|source| HarnessError::Io { path: bind.into(), source })?;
            eprintln!("serving on {}", stub.url());
            stub.wait();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
