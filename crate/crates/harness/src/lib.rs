//! Configuration, multi-seed orchestration and file formats around
//! [`ovdx_core`].
//!
//! A run directory holds, per seed `s`:
//!
//! * `metrics_seed{s}.csv`: one row per epoch, flushed as training goes;
//! * `visits_seed{s}.csv`: the state-visitation count grid;
//!
//! plus the resolved `config.toml` and a `summary.toml` once every seed has
//! finished.

pub mod config;
pub mod heatmap;
pub mod metrics;
pub mod runner;
pub mod summary;

pub use config::{Algorithm, ConfigError, ExperimentConfig};
