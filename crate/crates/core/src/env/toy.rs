//! Deterministic environments with known optimal behaviour, for tests.

use alloc::vec;
use alloc::vec::Vec;

use super::{Environment, StepResult};
use crate::Result;

/// Single-step episodes with a constant reward and a constant observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantBandit {
    pub reward: f64,
    pub action_dim: usize,
}

impl Environment for ConstantBandit {
    fn observation_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn reset(&mut self) -> Vec<f64> {
        vec![0.0]
    }

    fn step(&mut self, _action: &[f64]) -> Result<StepResult> {
        Ok(StepResult {
            observation: vec![0.0],
            reward: self.reward,
            terminated: true,
            truncated: false,
        })
    }
}

/// One-dimensional walk on `[-1, 1]`: the action moves the agent by
/// `action·step`, reaching `x ≥ goal` pays 1 and ends the episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineWorld {
    pub position: f64,
    pub start: f64,
    pub goal: f64,
    pub step: f64,
    pub max_steps: usize,
    pub steps: usize,
}

impl Default for LineWorld {
    fn default() -> Self {
        Self {
            position: 0.0,
            start: 0.0,
            goal: 0.95,
            step: 0.1,
            max_steps: 50,
            steps: 0,
        }
    }
}

impl Environment for LineWorld {
    fn observation_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self) -> Vec<f64> {
        self.position = self.start;
        self.steps = 0;
        vec![self.position]
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let a = if action[0].is_finite() {
            action[0].clamp(-1.0, 1.0)
        } else {
            0.0
        };
        self.position = (self.position + a * self.step).clamp(-1.0, 1.0);
        self.steps += 1;
        let terminated = self.position >= self.goal;
        Ok(StepResult {
            observation: vec![self.position],
            reward: if terminated { 1.0 } else { 0.0 },
            terminated,
            truncated: !terminated && self.steps >= self.max_steps,
        })
    }
}
