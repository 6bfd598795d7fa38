//! Per-epoch metrics files.
//!
//! Comma-separated text with a fixed header. Rows are appended and flushed
//! one epoch at a time, so a file cut short by a crash is still valid.
//! Empty diagnostics (epochs with no explore-mode steps) are written as `NaN`.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ovdx_core::agent::EpochMetrics;

pub const HEADER: [&str; 7] = [
    "epoch",
    "eval_return_mean",
    "eval_return_std",
    "epistemic_mean",
    "aleatoric_mean",
    "m_mean",
    "shift_norm_mean",
];

pub struct MetricsWriter {
    inner: csv::Writer<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut inner = csv::Writer::from_writer(file);
        inner.write_record(HEADER)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn append(&mut self, m: &EpochMetrics) -> Result<()> {
        self.inner.write_record(&[
            m.epoch.to_string(),
            m.eval_return_mean.to_string(),
            m.eval_return_std.to_string(),
            m.epistemic_mean.to_string(),
            m.aleatoric_mean.to_string(),
            m.m_mean.to_string(),
            m.shift_norm_mean.to_string(),
        ])?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<EpochMetrics>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER) {
        bail!("{}: unexpected header {:?}", path.display(), header);
    }
    let mut rows: Vec<EpochMetrics> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let num = |i: usize| -> Result<f64> {
            record[i].parse().with_context(|| {
                format!("{} row {}: bad `{}`", path.display(), line + 1, HEADER[i])
            })
        };
        let epoch: usize = record[0]
            .parse()
            .with_context(|| format!("{} row {}: bad epoch", path.display(), line + 1))?;
        if rows.last().is_some_and(|p| p.epoch >= epoch) {
            bail!(
                "{}: epochs are not increasing at row {}",
                path.display(),
                line + 1
            );
        }
        rows.push(EpochMetrics {
            epoch,
            eval_return_mean: num(1)?,
            eval_return_std: num(2)?,
            epistemic_mean: num(3)?,
            aleatoric_mean: num(4)?,
            m_mean: num(5)?,
            shift_norm_mean: num(6)?,
        });
    }
    Ok(rows)
}
