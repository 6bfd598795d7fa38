//! Environments the agent interacts with.
//!
//! Agents always emit actions inside the `[-1, 1]^d` box; each environment
//! maps that box onto its own controls.

mod gridchaos;
mod noisy;
mod toy;

use alloc::vec::Vec;

pub use gridchaos::{
    action_to_motion, gridchaos_step, quadrant_of, Bounds, EnvState, GridChaos, GridChaosConfig,
    GridStep, GOAL_REWARD,
};
pub use noisy::{noisy_wrapper_step, NoisyEnv};
pub use toy::{ConstantBandit, LineWorld};

use crate::Result;

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// A terminal state was reached.
    pub terminated: bool,
    /// The episode was cut off by its step limit.
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Starts a new episode and returns its first observation.
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<StepResult>;
}

impl<E: Environment + ?Sized> Environment for alloc::boxed::Box<E> {
    fn observation_dim(&self) -> usize {
        (**self).observation_dim()
    }

    fn action_dim(&self) -> usize {
        (**self).action_dim()
    }

    fn reset(&mut self) -> Vec<f64> {
        (**self).reset()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        (**self).step(action)
    }
}
