use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Environment, StepResult};
use crate::rng;
use crate::Result;

/// Steps `inner` and perturbs each component of the next state with
/// independent `N(0, noise_std²)` noise.
pub fn noisy_wrapper_step<E: Environment + ?Sized, R: Rng + ?Sized>(
    inner: &mut E,
    action: &[f64],
    noise_std: f64,
    rng: &mut R,
) -> Result<StepResult> {
    let mut step = inner.step(action)?;
    for x in &mut step.observation {
        let n: f64 = StandardNormal.sample(rng);
        *x += noise_std * n;
    }
    Ok(step)
}

/// Environment wrapper that injects Gaussian noise into every transition.
#[derive(Debug, Clone)]
pub struct NoisyEnv<E> {
    inner: E,
    noise_std: f64,
    rng: rng::Rng,
}

impl<E: Environment> NoisyEnv<E> {
    pub fn new(inner: E, noise_std: f64, rng: rng::Rng) -> Self {
        Self {
            inner,
            noise_std,
            rng,
        }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Environment> Environment for NoisyEnv<E> {
    fn observation_dim(&self) -> usize {
        self.inner.observation_dim()
    }

    fn action_dim(&self) -> usize {
        self.inner.action_dim()
    }

    fn reset(&mut self) -> Vec<f64> {
        self.inner.reset()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        noisy_wrapper_step(&mut self.inner, action, self.noise_std, &mut self.rng)
    }
}
