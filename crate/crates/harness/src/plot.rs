use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, IoContext, Result};
use crate::metrics::MetricsRecord;

pub const DEFAULT_WINDOW: usize = 10;

/// Trailing mean over the last `window` values (fewer at the start).
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub episode: usize,
    pub smoothed_train_reward: f64,
    pub test_reward: Option<f64>,
}

pub fn emit_plot_data(records: &[MetricsRecord], window: usize) -> Result<Vec<PlotRow>> {
    if records.is_empty() {
        return Err(HarnessError::EmptyLog);
    }
    let raw: Vec<f64> = records.iter().map(|r| r.train_reward).collect();
    Ok(records
        .iter()
        .zip(moving_average(&raw, window))
        .map(|(r, s)| PlotRow { episode: r.episode, smoothed_train_reward: s, test_reward: r.test_reward })
        .collect())
}

pub fn write_plot_data(path: &Path, rows: &[PlotRow]) -> Result<()> {
    let mut file = File::create(path).at(path)?;
    writeln!(file, "episode,smoothed_train_reward,test_reward").at(path)?;
    for r in rows {
        let test = r.test_reward.map(|t| t.to_string()).unwrap_or_default();
        writeln!(file, "{},{},{}", r.episode, r.smoothed_train_reward, test).at(path)?;
    }
    Ok(())
}
