//! Training runs: one per seed, each owning its agent, environments and files.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ovdx_core::agent::{train, Agent, EpochMetrics, TrainObserver};
use ovdx_core::env::{Bounds, Environment, GridChaos, NoisyEnv};
use ovdx_core::rng::{stream, Stream};

use crate::config::{EnvKind, ExperimentConfig};
use crate::heatmap::VisitGrid;
use crate::metrics::MetricsWriter;
use crate::summary::Summary;

pub fn metrics_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("metrics_seed{seed}.csv"))
}

pub fn visits_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("visits_seed{seed}.csv"))
}

pub fn summary_path(dir: &Path) -> PathBuf {
    dir.join("summary.toml")
}

pub fn config_path(dir: &Path) -> PathBuf {
    dir.join("config.toml")
}

type BoxedEnv = Box<dyn Environment + Send>;

/// Training and evaluation environments for `seed`, each with its own noise stream.
pub fn make_envs(config: &ExperimentConfig, seed: u64) -> Result<(BoxedEnv, BoxedEnv)> {
    let grid = config.gridchaos();
    let train_env = GridChaos::new(grid, stream(seed, Stream::TrainEnv))?;
    let eval_env = GridChaos::new(grid, stream(seed, Stream::EvalEnv))?;
    Ok(match config.env.kind {
        EnvKind::Gridchaos => (Box::new(train_env), Box::new(eval_env)),
        EnvKind::NoisyGridchaos => {
            let sd = config.env.noise_std;
            (
                Box::new(NoisyEnv::new(
                    train_env,
                    sd,
                    stream(seed, Stream::TrainObservation),
                )),
                Box::new(NoisyEnv::new(
                    eval_env,
                    sd,
                    stream(seed, Stream::EvalObservation),
                )),
            )
        }
    })
}

struct Recorder {
    writer: MetricsWriter,
    visits: VisitGrid,
    bounds: Bounds,
    rows: Vec<EpochMetrics>,
}

impl TrainObserver for Recorder {
    type Error = anyhow::Error;

    fn on_step(&mut self, observation: &[f64]) -> Result<()> {
        self.visits.record(observation, &self.bounds);
        Ok(())
    }

    fn on_epoch(&mut self, metrics: &EpochMetrics) -> Result<()> {
        self.writer.append(metrics)?;
        self.rows.push(*metrics);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub metrics: Vec<EpochMetrics>,
    pub visits: VisitGrid,
}

/// Trains one seed, streaming metrics to `metrics_seed{seed}.csv`. The visit
/// grid is written when training ends, including after a failure.
pub fn run_seed(config: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<SeedRun> {
    let (mut train_env, mut eval_env) = make_envs(config, seed)?;
    let agent_config = config.agent_config(train_env.observation_dim(), train_env.action_dim());
    let mut agent = Agent::new(agent_config, seed)?;
    let n = config.heatmap_resolution;
    let mut recorder = Recorder {
        writer: MetricsWriter::create(&metrics_path(out_dir, seed))?,
        visits: VisitGrid::new(n, n),
        bounds: config.bounds(),
        rows: Vec::new(),
    };
    let outcome = train(
        &mut agent,
        &config.train_config(),
        &mut train_env,
        &mut eval_env,
        &mut recorder,
    );
    let visits = visits_path(out_dir, seed);
    std::fs::write(&visits, recorder.visits.to_csv())
        .with_context(|| format!("writing {}", visits.display()))?;
    outcome.with_context(|| format!("training seed {seed}"))?;
    Ok(SeedRun {
        seed,
        metrics: recorder.rows,
        visits: recorder.visits,
    })
}

/// Runs every configured seed on up to `jobs` threads, then writes the
/// summary. Per-seed files of failed runs are kept.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    jobs: usize,
) -> Result<(Summary, Vec<SeedRun>)> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    std::fs::write(config_path(out_dir), config.to_toml())?;
    let jobs = jobs.max(1);
    let mut results: Vec<Result<SeedRun>> = Vec::with_capacity(config.seeds.len());
    for chunk in config.seeds.chunks(jobs) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&seed| scope.spawn(move || run_seed(config, seed, out_dir)))
                .collect();
            for h in handles {
                results.push(
                    h.join()
                        .unwrap_or_else(|_| Err(anyhow::anyhow!("training thread panicked"))),
                );
            }
        });
    }
    let runs: Vec<SeedRun> = results.into_iter().collect::<Result<_>>()?;
    let borrowed: Vec<(u64, &[EpochMetrics])> = runs
        .iter()
        .map(|r| (r.seed, r.metrics.as_slice()))
        .collect();
    let summary = Summary::from_runs(&borrowed);
    std::fs::write(summary_path(out_dir), summary.to_toml())?;
    Ok((summary, runs))
}
