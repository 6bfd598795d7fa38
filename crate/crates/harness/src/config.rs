//! Experiment configuration file.
//!
//! The file is TOML. Every key is optional and falls back to the standard
//! settings, so an empty file is a valid configuration:
//!
//! ```toml
//! algorithm = "ovde_g"      # ovde_g | ovde_q | ovde_m | dsac | sac_scalar
//! seeds = [0, 1, 2]
//! epochs = 1250
//! steps_per_epoch = 100
//! warmup_steps = 1000
//! eval_episodes = 10
//! heatmap_resolution = 50
//!
//! [agent]
//! gamma = 0.99
//! tau = 0.005
//! learning_rate = 0.0003
//! adam_beta1 = 0.9
//! adam_beta2 = 0.999
//! adam_epsilon = 1e-8
//! batch_size = 256
//! quantiles = 20
//! buffer_size = 100000
//! hidden = [64, 64]
//! entropy_coeff = 0.2
//!
//! [explorer]
//! explore_alpha = 0.05
//! beta = 3.2
//! c_norm = 0.5
//! k_samples = 4
//!
//! [env]
//! kind = "gridchaos"        # gridchaos | noisy_gridchaos
//! noise_std = 0.0           # observation noise of noisy_gridchaos
//! quadrant_noise = [0.1, 0.5, 0.5, 0.1]
//! start = [-0.9, -0.9]
//! goal = [0.9, 0.9]
//! goal_radius = 0.1
//! max_steps = 100
//! max_step_distance = 0.1
//! bounds_min = [-1.0, -1.0]
//! bounds_max = [1.0, 1.0]
//! ```
//!
//! Any key can be overridden from the command line with `path=value`, where
//! `path` is the dotted key (`agent.gamma=0.95`) and `value` is a TOML value.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ovdx_core::agent::{AgentConfig, TrainConfig};
use ovdx_core::critic::CriticLoss;
use ovdx_core::env::{Bounds, GridChaosConfig};
use ovdx_core::explorer::{ExplorationConfig, ZMode};
use ovdx_core::nn::AdamConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid override `{0}`: expected path=value")]
    Override(String),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Optimistic exploration with a pessimistic Gaussian current distribution.
    #[default]
    OvdeG,
    /// Optimistic exploration with the per-quantile-minimum current distribution.
    OvdeQ,
    /// Optimistic exploration without the pessimistic shift of the current distribution.
    OvdeM,
    /// Distributional SAC: the policy's own Gaussian explores.
    Dsac,
    /// SAC with scalar critics trained by squared error.
    SacScalar,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::OvdeG,
        Algorithm::OvdeQ,
        Algorithm::OvdeM,
        Algorithm::Dsac,
        Algorithm::SacScalar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OvdeG => "ovde_g",
            Algorithm::OvdeQ => "ovde_q",
            Algorithm::OvdeM => "ovde_m",
            Algorithm::Dsac => "dsac",
            Algorithm::SacScalar => "sac_scalar",
        }
    }

    pub fn explores_optimistically(self) -> bool {
        matches!(self, Algorithm::OvdeG | Algorithm::OvdeQ | Algorithm::OvdeM)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown algorithm `{s}` (expected ovde_g, ovde_q, ovde_m, dsac or sac_scalar)"
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    pub gamma: f64,
    pub tau: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    pub quantiles: usize,
    pub buffer_size: usize,
    pub hidden: Vec<usize>,
    pub entropy_coeff: f64,
}

impl Default for AgentSection {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            gamma: 0.99,
            tau: 5e-3,
            learning_rate: adam.learning_rate,
            adam_beta1: adam.beta1,
            adam_beta2: adam.beta2,
            adam_epsilon: adam.epsilon,
            batch_size: 256,
            quantiles: 20,
            buffer_size: 100_000,
            hidden: vec![64, 64],
            entropy_coeff: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorerSection {
    pub explore_alpha: f64,
    pub beta: f64,
    pub c_norm: f64,
    pub k_samples: usize,
}

impl Default for ExplorerSection {
    fn default() -> Self {
        let e = ExplorationConfig::default();
        Self {
            explore_alpha: e.alpha,
            beta: e.beta,
            c_norm: e.c_norm,
            k_samples: e.k_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    #[default]
    Gridchaos,
    /// GridChaos with extra Gaussian noise on every returned observation.
    NoisyGridchaos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub kind: EnvKind,
    pub noise_std: f64,
    pub quadrant_noise: [f64; 4],
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub goal_radius: f64,
    pub max_steps: usize,
    pub max_step_distance: f64,
    pub bounds_min: [f64; 2],
    pub bounds_max: [f64; 2],
}

impl Default for EnvSection {
    fn default() -> Self {
        let g = GridChaosConfig::default();
        Self {
            kind: EnvKind::Gridchaos,
            noise_std: 0.0,
            quadrant_noise: g.quadrant_noise,
            start: g.start,
            goal: g.goal,
            goal_radius: g.goal_radius,
            max_steps: g.max_steps,
            max_step_distance: g.max_step_distance,
            bounds_min: g.bounds.min,
            bounds_max: g.bounds.max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub warmup_steps: usize,
    pub eval_episodes: usize,
    pub heatmap_resolution: usize,
    pub agent: AgentSection,
    pub explorer: ExplorerSection,
    pub env: EnvSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            algorithm: Algorithm::default(),
            seeds: vec![0, 1, 2],
            epochs: t.epochs,
            steps_per_epoch: t.steps_per_epoch,
            warmup_steps: t.warmup_steps,
            eval_episodes: t.eval_episodes,
            heatmap_resolution: 50,
            agent: AgentSection::default(),
            explorer: ExplorerSection::default(),
            env: EnvSection::default(),
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

fn check(
    ok: bool,
    field: &'static str,
    reason: impl FnOnce() -> String,
) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(field, reason()))
    }
}

fn in_unit(field: &'static str, v: f64) -> Result<(), ConfigError> {
    check((0.0..=1.0).contains(&v), field, || {
        format!("must lie in [0, 1], got {v}")
    })
}

fn non_negative(field: &'static str, v: f64) -> Result<(), ConfigError> {
    check(v >= 0.0 && v.is_finite(), field, || {
        format!("must be finite and non-negative, got {v}")
    })
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    check(v > 0.0 && v.is_finite(), field, || {
        format!("must be finite and positive, got {v}")
    })
}

fn at_least_one(field: &'static str, v: usize) -> Result<(), ConfigError> {
    check(v >= 1, field, || "must be at least 1".into())
}

/// Sets `path` (dotted) in `doc` to the TOML value `raw`; values that do not
/// parse as TOML are taken as strings.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(assignment.into()))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(ConfigError::Override(assignment.into()));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut keys: Vec<&str> = path.split('.').collect();
    let last = keys.pop().expect("path is non-empty");
    let mut table = doc;
    for key in keys {
        let entry = table
            .entry(key)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::Override(assignment.into()))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::from_toml_with::<&str>(text, &[])
    }

    /// Parses `text`, applies `path=value` overrides, then validates.
    pub fn from_toml_with<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o.as_ref())?;
        }
        let config: ExperimentConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` (or starts from the defaults when `None`) and applies overrides.
    pub fn load<S: AsRef<str>>(path: Option<&Path>, overrides: &[S]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })?,
            None => String::new(),
        };
        Self::from_toml_with(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(!self.seeds.is_empty(), "seeds", || {
            "at least one seed is required".into()
        })?;
        at_least_one("steps_per_epoch", self.steps_per_epoch)?;
        at_least_one("eval_episodes", self.eval_episodes)?;
        at_least_one("heatmap_resolution", self.heatmap_resolution)?;

        let a = &self.agent;
        in_unit("agent.gamma", a.gamma)?;
        in_unit("agent.tau", a.tau)?;
        non_negative("agent.learning_rate", a.learning_rate)?;
        check(
            (0.0..1.0).contains(&a.adam_beta1),
            "agent.adam_beta1",
            || format!("must lie in [0, 1), got {}", a.adam_beta1),
        )?;
        check(
            (0.0..1.0).contains(&a.adam_beta2),
            "agent.adam_beta2",
            || format!("must lie in [0, 1), got {}", a.adam_beta2),
        )?;
        positive("agent.adam_epsilon", a.adam_epsilon)?;
        at_least_one("agent.batch_size", a.batch_size)?;
        at_least_one("agent.quantiles", a.quantiles)?;
        at_least_one("agent.buffer_size", a.buffer_size)?;
        check(a.hidden.iter().all(|&h| h > 0), "agent.hidden", || {
            "layer widths must be positive".into()
        })?;
        non_negative("agent.entropy_coeff", a.entropy_coeff)?;

        let x = &self.explorer;
        non_negative("explorer.explore_alpha", x.explore_alpha)?;
        non_negative("explorer.beta", x.beta)?;
        positive("explorer.c_norm", x.c_norm)?;

        let e = &self.env;
        non_negative("env.noise_std", e.noise_std)?;
        for &s in &e.quadrant_noise {
            non_negative("env.quadrant_noise", s)?;
        }
        check(
            e.bounds_min
                .iter()
                .zip(&e.bounds_max)
                .all(|(lo, hi)| lo < hi),
            "env.bounds_min",
            || "each component must be below env.bounds_max".into(),
        )?;
        let bounds = self.bounds();
        check(bounds.contains(e.start), "env.start", || {
            "must lie inside the bounds".into()
        })?;
        check(bounds.contains(e.goal), "env.goal", || {
            "must lie inside the bounds".into()
        })?;
        positive("env.goal_radius", e.goal_radius)?;
        at_least_one("env.max_steps", e.max_steps)?;
        positive("env.max_step_distance", e.max_step_distance)?;
        Ok(())
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            min: self.env.bounds_min,
            max: self.env.bounds_max,
        }
    }

    pub fn gridchaos(&self) -> GridChaosConfig {
        let e = &self.env;
        GridChaosConfig {
            quadrant_noise: e.quadrant_noise,
            goal: e.goal,
            goal_radius: e.goal_radius,
            start: e.start,
            max_steps: e.max_steps,
            max_step_distance: e.max_step_distance,
            bounds: self.bounds(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            steps_per_epoch: self.steps_per_epoch,
            warmup_steps: self.warmup_steps,
            eval_episodes: self.eval_episodes,
        }
    }

    /// Learner settings with the algorithm's choices applied: the baselines
    /// never shift the behavior mean, and `sac_scalar` uses one squared-error
    /// output per critic.
    pub fn agent_config(&self, obs_dim: usize, action_dim: usize) -> AgentConfig {
        let a = &self.agent;
        let x = &self.explorer;
        let (quantiles, critic_loss) = match self.algorithm {
            Algorithm::SacScalar => (1, CriticLoss::MeanSquared),
            _ => (a.quantiles, CriticLoss::Quantile),
        };
        AgentConfig {
            obs_dim,
            action_dim,
            hidden: a.hidden.clone(),
            quantiles,
            critic_loss,
            gamma: a.gamma,
            tau: a.tau,
            adam: AdamConfig {
                learning_rate: a.learning_rate,
                beta1: a.adam_beta1,
                beta2: a.adam_beta2,
                epsilon: a.adam_epsilon,
            },
            batch_size: a.batch_size,
            buffer_capacity: a.buffer_size,
            entropy_coeff: a.entropy_coeff,
            exploration: ExplorationConfig {
                alpha: if self.algorithm.explores_optimistically() {
                    x.explore_alpha
                } else {
                    0.0
                },
                beta: x.beta,
                c_norm: x.c_norm,
                k_samples: x.k_samples,
                z_mode: if self.algorithm == Algorithm::OvdeQ {
                    ZMode::Quantile
                } else {
                    ZMode::Gaussian
                },
                pessimistic: self.algorithm != Algorithm::OvdeM,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_standard_settings() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.agent.gamma, 0.99);
        assert_eq!(c.agent.tau, 5e-3);
        assert_eq!(c.agent.learning_rate, 3e-4);
        assert_eq!(c.agent.batch_size, 256);
        assert_eq!(c.agent.quantiles, 20);
        assert_eq!(c.agent.buffer_size, 100_000);
        assert_eq!(c.explorer.explore_alpha, 0.05);
        assert_eq!(c.explorer.beta, 3.2);
        assert_eq!(c.explorer.c_norm, 0.5);
        assert_eq!(c.steps_per_epoch, 100);
        assert_eq!(c.env.quadrant_noise, [0.1, 0.5, 0.5, 0.1]);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let c = ExperimentConfig::from_toml_with(
            "[agent]\ngamma = 0.5\n",
            &[
                "agent.gamma=0.9",
                "algorithm=dsac",
                "env.quadrant_noise=[0.0, 0.0, 0.0, 0.0]",
                "seeds=[4]",
            ],
        )
        .unwrap();
        assert_eq!(c.agent.gamma, 0.9);
        assert_eq!(c.algorithm, Algorithm::Dsac);
        assert_eq!(c.env.quadrant_noise, [0.0; 4]);
        assert_eq!(c.seeds, vec![4]);
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::from_toml("[agent]\ngamma = 1.5\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("agent.gamma"), "{e}");
        let e = ExperimentConfig::from_toml("[agent]\ngama = 0.5\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("gama"), "{e}");
        let e = ExperimentConfig::from_toml("algorithm = \"ppo\"\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("ppo"), "{e}");
        let e = ExperimentConfig::from_toml("[env]\nstart = [3.0, 0.0]\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("env.start"), "{e}");
        assert!(ExperimentConfig::from_toml_with("", &["no_equals"]).is_err());
    }

    #[test]
    fn algorithms_map_onto_learner_settings() {
        let mut c = ExperimentConfig::default();
        for algo in Algorithm::ALL {
            c.algorithm = algo;
            let a = c.agent_config(2, 2);
            a.validate().unwrap();
            assert_eq!(a.exploration.alpha > 0.0, algo.explores_optimistically());
        }
        c.algorithm = Algorithm::SacScalar;
        assert_eq!(c.agent_config(2, 2).quantiles, 1);
        c.algorithm = Algorithm::OvdeM;
        assert!(!c.agent_config(2, 2).exploration.pessimistic);
        c.algorithm = Algorithm::OvdeQ;
        assert_eq!(c.agent_config(2, 2).exploration.z_mode, ZMode::Quantile);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
    }
}
