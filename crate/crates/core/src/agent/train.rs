use alloc::vec::Vec;

use super::{ActionMode, Agent, Transition};
use crate::env::Environment;
use crate::math::{mean, population_variance, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub steps_per_epoch: usize,
    /// Initial environment steps taken with uniform random actions.
    pub warmup_steps: usize,
    pub eval_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1250,
            steps_per_epoch: 100,
            warmup_steps: 1000,
            eval_episodes: 10,
        }
    }
}

/// Per-epoch summary. Exploration diagnostics average over the epoch's
/// explore-mode steps and are NaN when there were none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub eval_return_mean: f64,
    pub eval_return_std: f64,
    pub epistemic_mean: f64,
    pub aleatoric_mean: f64,
    pub m_mean: f64,
    pub shift_norm_mean: f64,
}

/// Receives the training stream as it is produced.
pub trait TrainObserver {
    type Error: From<Error>;

    /// Called with the next observation after every training step.
    fn on_step(&mut self, _observation: &[f64]) -> core::result::Result<(), Self::Error> {
        Ok(())
    }

    fn on_epoch(&mut self, metrics: &EpochMetrics) -> core::result::Result<(), Self::Error>;
}

impl TrainObserver for Vec<EpochMetrics> {
    type Error = Error;

    fn on_epoch(&mut self, metrics: &EpochMetrics) -> Result<()> {
        self.push(*metrics);
        Ok(())
    }
}

/// Undiscounted returns of `episodes` exploit-mode episodes.
pub fn evaluate<E: Environment + ?Sized>(
    agent: &mut Agent,
    env: &mut E,
    episodes: usize,
) -> Result<Vec<f64>> {
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset();
        let mut total = 0.0;
        loop {
            let chosen = agent.sample_action(&obs, ActionMode::Exploit)?;
            let step = env.step(&chosen.sample.action)?;
            total += step.reward;
            if step.done() {
                break;
            }
            obs = step.observation;
        }
        returns.push(total);
    }
    Ok(returns)
}

#[derive(Default)]
struct DiagnosticSums {
    count: usize,
    epistemic: f64,
    aleatoric: f64,
    multiplier: f64,
    shift: f64,
}

impl DiagnosticSums {
    fn mean(&self, total: f64) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            total / self.count as f64
        }
    }
}

/// Runs `config.epochs × config.steps_per_epoch` training steps with one
/// gradient update per step once warmup is over and a full batch is
/// available, evaluating at the end of every epoch.
pub fn train<E, V, O>(
    agent: &mut Agent,
    config: &TrainConfig,
    train_env: &mut E,
    eval_env: &mut V,
    observer: &mut O,
) -> core::result::Result<(), O::Error>
where
    E: Environment + ?Sized,
    V: Environment + ?Sized,
    O: TrainObserver + ?Sized,
{
    if train_env.action_dim() != agent.config().action_dim
        || train_env.observation_dim() != agent.config().obs_dim
    {
        return Err(Error::Usage("environment does not match the agent's dimensions").into());
    }
    let mut obs = train_env.reset();
    let mut step_index = 0usize;
    for epoch in 0..config.epochs {
        let mut diag = DiagnosticSums::default();
        for _ in 0..config.steps_per_epoch {
            let sample = if step_index < config.warmup_steps {
                agent.random_action()
            } else {
                let chosen = agent.sample_action(&obs, ActionMode::Explore)?;
                if let Some(d) = chosen.diagnostics {
                    diag.count += 1;
                    diag.epistemic += d.epistemic_std;
                    diag.aleatoric += d.aleatoric_std;
                    diag.multiplier += d.multiplier;
                    diag.shift += d.shift_norm;
                }
                chosen.sample
            };
            let step = train_env.step(&sample.action)?;
            if !step.reward.is_finite() {
                return Err(Error::Environment("non-finite reward").into());
            }
            observer.on_step(&step.observation)?;
            agent.observe(Transition {
                state: core::mem::take(&mut obs),
                action: sample.action,
                raw_action: sample.raw_action,
                reward: step.reward,
                next_state: step.observation.clone(),
                done: step.terminated,
            });
            obs = if step.done() {
                train_env.reset()
            } else {
                step.observation
            };
            step_index += 1;
            if step_index > config.warmup_steps && agent.ready() {
                agent.update()?;
            }
        }
        let returns = evaluate(agent, eval_env, config.eval_episodes)?;
        let metrics = EpochMetrics {
            epoch,
            eval_return_mean: if returns.is_empty() {
                f64::NAN
            } else {
                mean(&returns)
            },
            eval_return_std: if returns.is_empty() {
                f64::NAN
            } else {
                sqrt(population_variance(&returns))
            },
            epistemic_mean: diag.mean(diag.epistemic),
            aleatoric_mean: diag.mean(diag.aleatoric),
            m_mean: diag.mean(diag.multiplier),
            shift_norm_mean: diag.mean(diag.shift),
        };
        observer.on_epoch(&metrics)?;
    }
    Ok(())
}
