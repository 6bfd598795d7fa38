//! Final-return and first-goal statistics across seeds.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ovdx_core::agent::EpochMetrics;
use serde::{Deserialize, Serialize};

use crate::metrics::read_metrics;

/// Return at or above which an evaluation counts as reaching the goal.
pub const GOAL_RETURN: f64 = 100.0;

/// Trailing epochs averaged into the final return: 8% of the run, capped at 100.
pub fn final_window(epochs: usize) -> usize {
    // ceil(0.08·epochs) = ceil(2·epochs / 25)
    (2 * epochs).div_ceil(25).min(100)
}

/// Mean evaluation return over the trailing window; NaN for an empty run.
pub fn final_return(rows: &[EpochMetrics]) -> f64 {
    let k = final_window(rows.len());
    if k == 0 {
        return f64::NAN;
    }
    rows[rows.len() - k..]
        .iter()
        .map(|m| m.eval_return_mean)
        .sum::<f64>()
        / k as f64
}

/// First epoch whose evaluation return reached the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frg {
    Reached(usize),
    /// Never reached within this many epochs.
    Never(usize),
}

impl fmt::Display for Frg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frg::Reached(e) => write!(f, "{e}"),
            Frg::Never(n) => write!(f, "{n}+"),
        }
    }
}

pub fn frg_epoch(rows: &[EpochMetrics], threshold: f64) -> Frg {
    rows.iter()
        .find(|m| m.eval_return_mean >= threshold)
        .map_or(Frg::Never(rows.len()), |m| Frg::Reached(m.epoch))
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub epochs: usize,
    pub final_return: f64,
    pub frg: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub final_return_mean: f64,
    pub final_return_std: f64,
    pub seeds: Vec<SeedSummary>,
}

impl Summary {
    pub fn from_runs(runs: &[(u64, &[EpochMetrics])]) -> Self {
        let seeds: Vec<SeedSummary> = runs
            .iter()
            .map(|&(seed, rows)| SeedSummary {
                seed,
                epochs: rows.len(),
                final_return: final_return(rows),
                frg: frg_epoch(rows, GOAL_RETURN).to_string(),
            })
            .collect();
        let finals: Vec<f64> = seeds.iter().map(|s| s.final_return).collect();
        let (final_return_mean, final_return_std) = mean_std(&finals);
        Self {
            final_return_mean,
            final_return_std,
            seeds,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Files named `{prefix}{seed}{ext}` in `dir`, sorted by seed.
pub fn seed_files(dir: &Path, prefix: &str, ext: &str) -> Result<Vec<(u64, std::path::PathBuf)>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(seed) = name
            .strip_prefix(prefix)
            .and_then(|r| r.strip_suffix(ext))
            .and_then(|s| s.parse().ok())
        {
            found.push((seed, path));
        }
    }
    found.sort();
    Ok(found)
}

/// Recomputes the summary from the per-seed metrics files in `dir`.
pub fn summarize_dir(dir: &Path) -> Result<Summary> {
    let files = seed_files(dir, "metrics_seed", ".csv")?;
    if files.is_empty() {
        bail!("no metrics_seed*.csv files in {}", dir.display());
    }
    let runs: Vec<(u64, Vec<EpochMetrics>)> = files
        .iter()
        .map(|(s, p)| Ok((*s, read_metrics(p)?)))
        .collect::<Result<_>>()?;
    let borrowed: Vec<(u64, &[EpochMetrics])> =
        runs.iter().map(|(s, r)| (*s, r.as_slice())).collect();
    Ok(Summary::from_runs(&borrowed))
}
