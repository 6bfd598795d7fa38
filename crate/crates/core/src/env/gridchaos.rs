use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Environment, StepResult};
use crate::math::{cos, sin, sqrt};
use crate::rng;
use crate::{Error, Result};

pub const GOAL_REWARD: f64 = 100.0;

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            min: [-1.0, -1.0],
            max: [1.0, 1.0],
        }
    }
}

impl Bounds {
    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
        ]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn clip(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0].clamp(self.min[0], self.max[0]),
            p[1].clamp(self.min[1], self.max[1]),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridChaosConfig {
    /// Positional noise std for quadrants 1–4 (counterclockwise from upper right).
    pub quadrant_noise: [f64; 4],
    pub goal: [f64; 2],
    pub goal_radius: f64,
    pub start: [f64; 2],
    pub max_steps: usize,
    pub max_step_distance: f64,
    pub bounds: Bounds,
}

impl Default for GridChaosConfig {
    fn default() -> Self {
        Self {
            quadrant_noise: [0.1, 0.5, 0.5, 0.1],
            goal: [0.9, 0.9],
            goal_radius: 0.1,
            start: [-0.9, -0.9],
            max_steps: 100,
            max_step_distance: 0.1,
            bounds: Bounds::default(),
        }
    }
}

impl GridChaosConfig {
    pub fn validate(&self) -> Result<()> {
        let b = self.bounds;
        if !(b.min[0] < b.max[0] && b.min[1] < b.max[1]) {
            return Err(Error::Usage("gridchaos bounds must have min < max"));
        }
        if !b.contains(self.start) {
            return Err(Error::Usage("gridchaos start lies outside the bounds"));
        }
        if !b.contains(self.goal) {
            return Err(Error::Usage("gridchaos goal lies outside the bounds"));
        }
        if self.goal_radius.is_nan() || self.goal_radius <= 0.0 {
            return Err(Error::OutOfRange("goal radius", self.goal_radius));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max steps", 1, 0));
        }
        if self.max_step_distance.is_nan() || self.max_step_distance <= 0.0 {
            return Err(Error::OutOfRange(
                "max step distance",
                self.max_step_distance,
            ));
        }
        if let Some(&s) = self
            .quadrant_noise
            .iter()
            .find(|s| !(**s >= 0.0 && s.is_finite()))
        {
            return Err(Error::OutOfRange("quadrant noise", s));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvState {
    pub position: [f64; 2],
    pub step_count: usize,
}

/// Quadrant (1–4, counterclockwise from `(+, +)`) of `position` relative to
/// the centre of `bounds`. Points on an axis go to the lower-numbered
/// neighbouring quadrant.
pub fn quadrant_of(position: [f64; 2], bounds: &Bounds) -> usize {
    let c = bounds.center();
    let dx = position[0] - c[0];
    let dy = position[1] - c[1];
    if dy >= 0.0 {
        if dx >= 0.0 {
            1
        } else {
            2
        }
    } else if dx <= 0.0 {
        3
    } else {
        4
    }
}

/// Maps an agent action in `[-1, 1]²` to `(angle in [-π, π], distance in [0, max])`.
pub fn action_to_motion(action: &[f64], max_step_distance: f64) -> (f64, f64) {
    let a0 = action[0].clamp(-1.0, 1.0);
    let a1 = action[1].clamp(-1.0, 1.0);
    (a0 * PI, 0.5 * (a1 + 1.0) * max_step_distance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStep {
    pub state: EnvState,
    pub reward: f64,
    pub reached_goal: bool,
    pub done: bool,
}

/// One GridChaos transition. Exactly two standard-normal draws are taken
/// from `rng` per call regardless of the action.
pub fn gridchaos_step<R: Rng + ?Sized>(
    state: &EnvState,
    angle: f64,
    distance: f64,
    config: &GridChaosConfig,
    rng: &mut R,
) -> GridStep {
    let sigma = config.quadrant_noise[quadrant_of(state.position, &config.bounds) - 1];
    let n0: f64 = StandardNormal.sample(rng);
    let n1: f64 = StandardNormal.sample(rng);
    let distance = distance.clamp(0.0, config.max_step_distance);
    let p = state.position;
    let moved = [
        p[0] + distance * cos(angle) + sigma * n0,
        p[1] + distance * sin(angle) + sigma * n1,
    ];
    let position = config.bounds.clip(moved);
    let step_count = state.step_count + 1;
    let dx = position[0] - config.goal[0];
    let dy = position[1] - config.goal[1];
    let reached_goal = sqrt(dx * dx + dy * dy) <= config.goal_radius;
    GridStep {
        state: EnvState {
            position,
            step_count,
        },
        reward: if reached_goal { GOAL_REWARD } else { 0.0 },
        reached_goal,
        done: reached_goal || step_count >= config.max_steps,
    }
}

/// Stochastic 2-D navigation task with quadrant-dependent positional noise
/// and a sparse goal reward.
#[derive(Debug, Clone)]
pub struct GridChaos {
    config: GridChaosConfig,
    state: EnvState,
    rng: rng::Rng,
    nonfinite_actions: u64,
}

impl GridChaos {
    pub fn new(config: GridChaosConfig, rng: rng::Rng) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            state: EnvState {
                position: config.start,
                step_count: 0,
            },
            config,
            rng,
            nonfinite_actions: 0,
        })
    }

    pub fn config(&self) -> &GridChaosConfig {
        &self.config
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    /// Number of actions that contained NaN or infinite components.
    pub fn nonfinite_actions(&self) -> u64 {
        self.nonfinite_actions
    }
}

impl Environment for GridChaos {
    fn observation_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = EnvState {
            position: self.config.start,
            step_count: 0,
        };
        self.state.position.to_vec()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if action.len() != 2 {
            return Err(Error::Config("gridchaos action length", 2, action.len()));
        }
        let (angle, distance) = if action.iter().all(|a| a.is_finite()) {
            action_to_motion(action, self.config.max_step_distance)
        } else {
            self.nonfinite_actions += 1;
            (0.0, 0.0)
        };
        let step = gridchaos_step(&self.state, angle, distance, &self.config, &mut self.rng);
        self.state = step.state;
        Ok(StepResult {
            observation: vec![step.state.position[0], step.state.position[1]],
            reward: step.reward,
            terminated: step.reached_goal,
            truncated: step.done && !step.reached_goal,
        })
    }
}
