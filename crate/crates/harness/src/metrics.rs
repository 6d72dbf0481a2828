use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ugc_contract_core::ppo::EpisodeLog;

use crate::error::{HarnessError, IoContext, Result};

pub const METRICS_SCHEMA_VERSION: u32 = 1;
const SCHEMA_LINE: &str = "# schema_version=1";
const HEADER: [&str; 6] = ["episode", "train_reward", "test_reward", "actor_loss", "critic_loss", "gating_entropy"];

/// One row of the per-episode metrics log. Wall-clock time lives in a
/// separate timing file so the metrics file is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: usize,
    pub train_reward: f64,
    pub test_reward: Option<f64>,
    pub actor_loss: Option<f64>,
    pub critic_loss: Option<f64>,
    pub gating_entropy: Option<f64>,
    #[serde(skip)]
    pub wall_clock: Option<f64>,
}

impl From<&EpisodeLog> for MetricsRecord {
    fn from(log: &EpisodeLog) -> Self {
        Self {
            episode: log.episode,
            train_reward: log.train_reward,
            test_reward: log.test_reward,
            actor_loss: log.actor_loss,
            critic_loss: log.critic_loss,
            gating_entropy: log.gating_entropy,
            wall_clock: None,
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::Metrics(format!("{}: {e}", path.display()))
}

/// Append-only metrics log: a schema-version comment, a header row, then
/// one flushed row per episode.
pub struct MetricsWriter {
    path: PathBuf,
    writer: csv::Writer<File>,
    last_episode: usize,
}

impl MetricsWriter {
    /// Starts a fresh log at `path`, pre-filled with `existing` rows.
    pub fn create(path: impl Into<PathBuf>, existing: &[MetricsRecord]) -> Result<Self> {
        let path = path.into();
        let mut file = File::create(&path).at(&path)?;
        writeln!(file, "{SCHEMA_LINE}").at(&path)?;
        // Header written by hand so an empty log still has one.
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        writer.write_record(HEADER).map_err(|e| csv_err(&path, e))?;
        writer.flush().at(&path)?;
        let mut w = Self { path, writer, last_episode: 0 };
        for r in existing {
            w.append(r)?;
        }
        Ok(w)
    }

    pub fn append(&mut self, record: &MetricsRecord) -> Result<()> {
        if record.episode <= self.last_episode {
            return Err(HarnessError::Metrics(format!(
                "episode index {} does not follow {}",
                record.episode, self.last_episode
            )));
        }
        self.writer.serialize(record).map_err(|e| csv_err(&self.path, e))?;
        self.writer.flush().at(&self.path)?;
        self.last_episode = record.episode;
        Ok(())
    }
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let path = path.as_ref();
    let file = File::open(path).at(path)?;
    let mut first = String::new();
    let mut reader = BufReader::new(file);
    reader.read_line(&mut first).at(path)?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(HarnessError::Metrics(format!(
            "{}: expected `{SCHEMA_LINE}` as the first line",
            path.display()
        )));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut out: Vec<MetricsRecord> = Vec::new();
    for row in rdr.deserialize() {
        let rec: MetricsRecord = row.map_err(|e| csv_err(path, e))?;
        if let Some(prev) = out.last() {
            if rec.episode <= prev.episode {
                return Err(HarnessError::Metrics(format!("{}: episode index not increasing", path.display())));
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// Sidecar log of `episode,wall_clock_seconds`.
pub struct TimingWriter {
    path: PathBuf,
    file: File,
}

impl TimingWriter {
    pub fn open(path: impl Into<PathBuf>, keep_through: usize) -> Result<Self> {
        let path = path.into();
        let mut kept = Vec::new();
        if let Ok(text) = fs::read_to_string(&path) {
            for line in text.lines().skip(1) {
                match line.split(',').next().and_then(|e| e.parse::<usize>().ok()) {
                    Some(ep) if ep <= keep_through => kept.push(line.to_string()),
                    _ => {}
                }
            }
        }
        let mut file = OpenOptions::new().create(true).write(true).truncate(true).open(&path).at(&path)?;
        writeln!(file, "episode,wall_clock_seconds").at(&path)?;
        for line in kept {
            writeln!(file, "{line}").at(&path)?;
        }
        Ok(Self { path, file })
    }

    pub fn append(&mut self, episode: usize, seconds: f64) -> Result<()> {
        writeln!(self.file, "{episode},{seconds}").at(&self.path)
    }
}

/// Fills `wall_clock` from a timing sidecar.
pub fn join_timing(records: &mut [MetricsRecord], timing: impl AsRef<Path>) -> Result<()> {
    let path = timing.as_ref();
    let text = fs::read_to_string(path).at(path)?;
    let times: std::collections::HashMap<usize, f64> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let (e, s) = l.split_once(',')?;
            Some((e.parse().ok()?, s.parse().ok()?))
        })
        .collect();
    for r in records {
        r.wall_clock = times.get(&r.episode).copied();
    }
    Ok(())
}

/// Run-level summary derived from the metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub episodes: usize,
    /// Mean train reward over the last 10% of episodes.
    pub final_reward: f64,
    /// Mean over all logged greedy evaluations.
    pub mean_test_reward: Option<f64>,
    pub last_test_reward: Option<f64>,
    /// First episode whose smoothed train reward reaches 95% of `final_reward`.
    pub convergence_episode: Option<usize>,
}

pub fn final_reward(records: &[MetricsRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let tail = records.len().div_ceil(10);
    let slice = &records[records.len() - tail..];
    Some(slice.iter().map(|r| r.train_reward).sum::<f64>() / tail as f64)
}

pub fn convergence_episode(records: &[MetricsRecord], window: usize) -> Option<usize> {
    let fin = final_reward(records)?;
    let target = fin - 0.05 * fin.abs();
    let raw: Vec<f64> = records.iter().map(|r| r.train_reward).collect();
    let smooth = crate::plot::moving_average(&raw, window);
    records.iter().zip(smooth).find(|(_, s)| *s >= target).map(|(r, _)| r.episode)
}

pub fn summarize(records: &[MetricsRecord], window: usize) -> RunSummary {
    let tests: Vec<f64> = records.iter().filter_map(|r| r.test_reward).collect();
    RunSummary {
        episodes: records.len(),
        final_reward: final_reward(records).unwrap_or(0.0),
        mean_test_reward: (!tests.is_empty()).then(|| tests.iter().sum::<f64>() / tests.len() as f64),
        last_test_reward: tests.last().copied(),
        convergence_episode: convergence_episode(records, window),
    }
}
