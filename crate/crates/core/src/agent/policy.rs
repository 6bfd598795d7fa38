use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::math::{exp, softplus, tanh, HALF_LN_2PI, LN_2};
use crate::nn::{Matrix, Mlp};
use crate::{Error, Result};

/// `ln(1e-6)`: smallest admissible policy log standard deviation.
pub const LOG_STD_MIN: f64 = -13.815_510_557_964_274;
/// `ln(10)`: largest admissible policy log standard deviation.
pub const LOG_STD_MAX: f64 = core::f64::consts::LN_10;

/// Maps a pre-squash value into `(-1, 1)`.
pub fn squash(u: f64) -> f64 {
    tanh(u)
}

/// `log(1 − tanh²(u))`, stable for large `|u|`.
pub fn log_squash_jacobian(u: f64) -> f64 {
    2.0 * (LN_2 - u - softplus(-2.0 * u))
}

/// Log-density of `tanh(u)` when `u ~ N(mean, std²)` per dimension.
pub fn squashed_log_prob(u: &[f64], mean: &[f64], std: &[f64]) -> f64 {
    u.iter()
        .zip(mean)
        .zip(std)
        .map(|((&u, &m), &s)| {
            let z = (u - m) / s;
            -0.5 * z * z - libm::log(s) - HALF_LN_2PI - log_squash_jacobian(u)
        })
        .sum()
}

/// One draw from the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample {
    /// Squashed action in the `[-1, 1]` box.
    pub action: Vec<f64>,
    pub raw_action: Vec<f64>,
    pub log_prob: f64,
}

/// Squashed-Gaussian policy: a network mapping a state to the pre-squash
/// mean and log standard deviation of every action dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyHead {
    net: Mlp,
    action_dim: usize,
}

fn clamp_log_std(raw: f64) -> f64 {
    raw.clamp(LOG_STD_MIN, LOG_STD_MAX)
}

impl PolicyHead {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(obs_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(2 * action_dim);
        Self::from_network(Mlp::new(&sizes, rng)?, action_dim)
    }

    /// The network's outputs are `[mean…, log_std…]`.
    pub fn from_network(net: Mlp, action_dim: usize) -> Result<Self> {
        if action_dim == 0 || net.output_dim() != 2 * action_dim {
            return Err(Error::Config(
                "policy output width",
                2 * action_dim,
                net.output_dim(),
            ));
        }
        Ok(Self { net, action_dim })
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// Pre-squash mean `μ_φ` and standard deviation `σ_φ`.
    pub fn gaussian(&self, state: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let out = self.net.forward(state)?;
        let (mean, log_std) = out.split_at(self.action_dim);
        Ok((
            mean.to_vec(),
            log_std.iter().map(|&l| exp(clamp_log_std(l))).collect(),
        ))
    }

    /// Deterministic action `tanh(μ_φ)`.
    pub fn exploit(&self, state: &[f64]) -> Result<Vec<f64>> {
        let (mean, _) = self.gaussian(state)?;
        Ok(mean.into_iter().map(squash).collect())
    }

    /// Reparameterised draw `tanh(μ + σ·ε)` for given standard-normal `eps`.
    pub fn sample_with_noise(&self, state: &[f64], eps: &[f64]) -> Result<PolicySample> {
        if eps.len() != self.action_dim {
            return Err(Error::Config(
                "policy noise length",
                self.action_dim,
                eps.len(),
            ));
        }
        let (mean, std) = self.gaussian(state)?;
        Ok(draw(&mean, &std, eps))
    }

    pub fn sample<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<PolicySample> {
        let eps: Vec<f64> = (0..self.action_dim)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        self.sample_with_noise(state, &eps)
    }

    /// Draws one action per row of `states`; returns the actions and their log-densities.
    pub fn sample_batch<R: Rng + ?Sized>(
        &self,
        states: &Matrix,
        rng: &mut R,
    ) -> Result<(Matrix, Vec<f64>)> {
        let out = self.net.forward_batch(states)?;
        let a = self.action_dim;
        let mut actions = Matrix::zeros(states.rows(), a);
        let mut log_probs = Vec::with_capacity(states.rows());
        let mut eps = alloc::vec![0.0; a];
        let mut std = alloc::vec![0.0; a];
        for r in 0..states.rows() {
            let row = out.row(r);
            for d in 0..a {
                eps[d] = StandardNormal.sample(rng);
                std[d] = exp(clamp_log_std(row[a + d]));
            }
            let s = draw(&row[..a], &std, &eps);
            actions.row_mut(r).copy_from_slice(&s.action);
            log_probs.push(s.log_prob);
        }
        Ok((actions, log_probs))
    }
}

/// Draw from `N(mean, std²)` pushed through `tanh`, using the given noise.
pub fn draw(mean: &[f64], std: &[f64], eps: &[f64]) -> PolicySample {
    let raw_action: Vec<f64> = mean
        .iter()
        .zip(std)
        .zip(eps)
        .map(|((m, s), e)| m + s * e)
        .collect();
    let action = raw_action.iter().map(|&u| squash(u)).collect();
    let log_prob = raw_action
        .iter()
        .zip(std)
        .zip(eps)
        .map(|((&u, &s), &e)| -0.5 * e * e - libm::log(s) - HALF_LN_2PI - log_squash_jacobian(u))
        .sum();
    PolicySample {
        action,
        raw_action,
        log_prob,
    }
}

/// Gradient of a per-row actor objective with respect to the policy network
/// outputs, given `∂J/∂a` for each sampled action.
///
/// Per row the objective is `entropy_coeff·log π(a|s) − Q(s, a)` with the
/// `Q` contribution supplied as `dq_da` (already `∂(−Q)/∂a`, batch-scaled).
pub(crate) fn actor_output_grad(
    out: &Matrix,
    eps: &Matrix,
    d_obj_da: &Matrix,
    entropy_coeff: f64,
    scale: f64,
) -> Matrix {
    let a = eps.cols();
    let mut grad = Matrix::zeros(out.rows(), 2 * a);
    for r in 0..out.rows() {
        let row = out.row(r);
        let g = grad.row_mut(r);
        for d in 0..a {
            let raw_log_std = row[a + d];
            let log_std = clamp_log_std(raw_log_std);
            let std = exp(log_std);
            let e = eps.get(r, d);
            let u = row[d] + std * e;
            let t = tanh(u);
            // ∂/∂u of −log(1 − tanh²u) is 2·tanh(u)
            let d_obj_du = d_obj_da.get(r, d) * (1.0 - t * t) + scale * entropy_coeff * 2.0 * t;
            g[d] = d_obj_du;
            g[a + d] = if raw_log_std > LOG_STD_MIN && raw_log_std < LOG_STD_MAX {
                d_obj_du * std * e - scale * entropy_coeff
            } else {
                0.0
            };
        }
    }
    grad
}
