//! Noise-aware optimistic behavior policy.
//!
//! From the two critics' quantiles at `(s, a)` this module builds
//!
//! * the optimistic value distribution `Z̄ ~ N(μ + β·σ_epi, σ_alea²)`,
//! * the current return distribution `Z`, either the pessimistic Gaussian
//!   `N(μ − β·σ_epi, σ_alea²)` or the per-quantile minimum of the critics,
//!
//! and shifts the policy mean one gradient-ascent step along
//! `m·∂z̄/∂a` where `m = log(Φ_Z(z̄)/C) + 1`. The covariance is left as is.
//!
//! Actions reach the critics through `tanh`, so the ascent step is taken on
//! the pre-squash mean and the gradient carries the `1 − tanh²` factor.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::agent::PolicyHead;
use crate::critic::{concat, CriticEnsemble, QuantileDistribution};
use crate::math::{log, std_normal_cdf, tanh};
use crate::nn::Matrix;
use crate::uncertainty::{aleatoric_std_from, epistemic_std_from};
use crate::{Error, Result};

/// Lower bound applied to every Gaussian standard deviation.
pub const STD_FLOOR: f64 = 1e-6;
/// Lower bound applied to CDF values before taking logarithms.
pub const CDF_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub mean: f64,
    pub std: f64,
}

impl GaussianSpec {
    /// Gaussian with its standard deviation floored at [`STD_FLOOR`].
    pub fn new(mean: f64, std: f64) -> Self {
        Self {
            mean,
            std: std.max(STD_FLOOR),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.mean) / self.std)
    }
}

/// Shape of the current return distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZMode {
    /// Gaussian with mean shifted down by `β·σ_epi`.
    Gaussian,
    /// Uniform over the per-quantile minima of the two critics.
    Quantile,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationConfig {
    /// Step size of the mean shift.
    pub alpha: f64,
    /// Weight of the epistemic standard deviation.
    pub beta: f64,
    /// Normalisation constant `C`.
    pub c_norm: f64,
    /// Number of reparameterised `z̄` samples. Zero uses the OVD mean only.
    pub k_samples: usize,
    pub z_mode: ZMode,
    /// When false the Gaussian current distribution keeps the plain ensemble
    /// mean instead of subtracting `β·σ_epi`.
    pub pessimistic: bool,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 3.2,
            c_norm: 0.5,
            k_samples: 4,
            z_mode: ZMode::Gaussian,
            pessimistic: true,
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::OutOfRange("exploration alpha", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::OutOfRange("exploration beta", self.beta));
        }
        if !(self.c_norm > 0.0 && self.c_norm.is_finite()) {
            return Err(Error::OutOfRange("normalisation constant", self.c_norm));
        }
        Ok(())
    }
}

/// Current return distribution in either of its two forms.
#[derive(Debug, Clone, PartialEq)]
pub enum ReturnDistribution {
    Gaussian(GaussianSpec),
    Quantile(QuantileDistribution),
}

impl ReturnDistribution {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ReturnDistribution::Gaussian(g) => g.cdf(x),
            ReturnDistribution::Quantile(q) => q.cdf(x),
        }
    }
}

pub fn cdf(dist: &ReturnDistribution, x: f64) -> f64 {
    dist.cdf(x)
}

/// `μ(s, a)`: mean over quantiles and both critics.
pub fn ensemble_mean(quantiles: [&[f64]; 2]) -> f64 {
    0.5 * (crate::math::mean(quantiles[0]) + crate::math::mean(quantiles[1]))
}

/// Optimistic value distribution from critic quantiles.
pub fn ovd_from(quantiles: [&[f64]; 2], beta: f64) -> GaussianSpec {
    let mean = ensemble_mean(quantiles) + beta * epistemic_std_from(quantiles);
    GaussianSpec::new(mean, aleatoric_std_from(quantiles))
}

/// Pessimistic Gaussian current distribution from critic quantiles.
pub fn current_gaussian_from(quantiles: [&[f64]; 2], beta: f64) -> GaussianSpec {
    let mean = ensemble_mean(quantiles) - beta * epistemic_std_from(quantiles);
    GaussianSpec::new(mean, aleatoric_std_from(quantiles))
}

/// Per-quantile minimum of the two critics.
pub fn current_quantile_from(
    quantiles: [&[f64]; 2],
    fractions: &[f64],
) -> Result<QuantileDistribution> {
    let values = quantiles[0]
        .iter()
        .zip(quantiles[1])
        .map(|(a, b)| a.min(*b))
        .collect();
    QuantileDistribution::with_fractions(values, fractions.to_vec())
}

/// Current return distribution selected by `config`.
pub fn current_from(
    quantiles: [&[f64]; 2],
    fractions: &[f64],
    config: &ExplorationConfig,
) -> Result<ReturnDistribution> {
    Ok(match config.z_mode {
        ZMode::Quantile => {
            ReturnDistribution::Quantile(current_quantile_from(quantiles, fractions)?)
        }
        ZMode::Gaussian if config.pessimistic => {
            ReturnDistribution::Gaussian(current_gaussian_from(quantiles, config.beta))
        }
        ZMode::Gaussian => ReturnDistribution::Gaussian(current_gaussian_from(quantiles, 0.0)),
    })
}

pub fn build_ovd(
    state: &[f64],
    action: &[f64],
    ensemble: &CriticEnsemble,
    beta: f64,
) -> Result<GaussianSpec> {
    let [a, b] = ensemble.evaluate(state, action)?;
    Ok(ovd_from([&a, &b], beta))
}

pub fn build_current_gaussian(
    state: &[f64],
    action: &[f64],
    ensemble: &CriticEnsemble,
    beta: f64,
) -> Result<GaussianSpec> {
    let [a, b] = ensemble.evaluate(state, action)?;
    Ok(current_gaussian_from([&a, &b], beta))
}

pub fn build_current_quantile(
    state: &[f64],
    action: &[f64],
    ensemble: &CriticEnsemble,
) -> Result<QuantileDistribution> {
    let [a, b] = ensemble.evaluate(state, action)?;
    current_quantile_from([&a, &b], ensemble.fractions())
}

fn floored(phi: f64) -> f64 {
    phi.clamp(CDF_FLOOR, 1.0)
}

/// `Φ·log(Φ/C)` with `Φ` clamped to `[CDF_FLOOR, 1]`.
pub fn ability_integrand(phi: f64, c_norm: f64) -> f64 {
    let p = floored(phi);
    p * log(p / c_norm)
}

/// Ascent multiplier `m = log(Φ/C) + 1` with `Φ` clamped to `[CDF_FLOOR, 1]`.
pub fn exploration_multiplier(phi: f64, c_norm: f64) -> f64 {
    log(floored(phi) / c_norm) + 1.0
}

/// `(1/C)·E_{z̄∼ovd}[Φ_Z(z̄)·log(Φ_Z(z̄)/C)]` using the standard normal
/// draws `eps` for `z̄ = mean + std·ε`. An empty `eps` evaluates at the mean.
pub fn ability_at(
    ovd: &GaussianSpec,
    current: &ReturnDistribution,
    c_norm: f64,
    eps: &[f64],
) -> f64 {
    if eps.is_empty() {
        return ability_integrand(current.cdf(ovd.mean), c_norm) / c_norm;
    }
    let total: f64 = eps
        .iter()
        .map(|e| ability_integrand(current.cdf(ovd.mean + ovd.std * e), c_norm))
        .sum();
    total / (eps.len() as f64 * c_norm)
}

/// Monte-Carlo estimate of the exploration ability of `policy` at `state`,
/// drawing `samples` actions from the policy and one `z̄` per action.
pub fn exploration_ability<R: Rng + ?Sized>(
    state: &[f64],
    policy: &PolicyHead,
    ensemble: &CriticEnsemble,
    config: &ExplorationConfig,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Usage(
            "exploration ability needs at least one sample",
        ));
    }
    let mut total = 0.0;
    for _ in 0..samples {
        let action = policy.sample(state, rng)?.action;
        let [a, b] = ensemble.evaluate(state, &action)?;
        let q = [a.as_slice(), b.as_slice()];
        let ovd = ovd_from(q, config.beta);
        let current = current_from(q, ensemble.fractions(), config)?;
        let e: f64 = StandardNormal.sample(rng);
        total += ability_at(&ovd, &current, config.c_norm, &[e]);
    }
    Ok(total / samples as f64)
}

/// `μ_E = μ_φ + α·m·ḡ` where `ḡ` is the sample-averaged `∂z̄/∂a`.
pub fn behavior_mean(mu_phi: &[f64], alpha: f64, m: f64, mean_grad: &[f64]) -> Vec<f64> {
    mu_phi
        .iter()
        .zip(mean_grad)
        .map(|(mu, g)| mu + alpha * m * g)
        .collect()
}

/// Per-step quantities reported alongside the behavior policy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BehaviorDiagnostics {
    pub epistemic_std: f64,
    pub aleatoric_std: f64,
    pub multiplier: f64,
    /// Euclidean norm of `μ_E − μ_φ`.
    pub shift_norm: f64,
    /// The gradient was non-finite and the policy mean was kept.
    pub fallback: bool,
    /// `Φ < C/e`, so the step points away from the gradient.
    pub reversed: bool,
}

/// Gaussian behavior policy over pre-squash actions.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorPolicy {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub diagnostics: BehaviorDiagnostics,
}

/// `∂z̄/∂Z_i^k` averaged over samples whose mean standard-normal draw is
/// `eps_mean`. Returns the cotangents for critic 0 and critic 1.
fn ovd_sample_cotangent(quantiles: [&[f64]; 2], beta: f64, eps_mean: f64) -> [Vec<f64>; 2] {
    let n = quantiles[0].len();
    let nf = n as f64;
    let sigma_epi = epistemic_std_from(quantiles);
    let sigma_alea = aleatoric_std_from(quantiles);
    let per_quantile_mean = |i: usize| 0.5 * (quantiles[0][i] + quantiles[1][i]);
    let grand_mean = ensemble_mean(quantiles);
    let mut c0 = vec![1.0 / (2.0 * nf); n];
    let mut c1 = c0.clone();
    if beta != 0.0 && sigma_epi > 0.0 {
        for i in 0..n {
            let d = beta * (quantiles[0][i] - quantiles[1][i]) / (4.0 * nf * sigma_epi);
            c0[i] += d;
            c1[i] -= d;
        }
    }
    // the floored std is constant below STD_FLOOR
    if eps_mean != 0.0 && sigma_alea > STD_FLOOR {
        for i in 0..n {
            let d = eps_mean * (per_quantile_mean(i) - grand_mean) / (2.0 * nf * sigma_alea);
            c0[i] += d;
            c1[i] += d;
        }
    }
    [c0, c1]
}

/// Behavior policy at `state` for a policy head with pre-squash mean
/// `mu_phi` and standard deviation `sigma_phi`.
///
/// `eps` holds the `K` standard-normal draws for `z̄_i = μ_Z̄ + σ_alea·ε_i`;
/// an empty slice uses `z̄ = μ_Z̄`. The multiplier `m` is evaluated once at
/// the OVD mean for `a = tanh(μ_φ)`.
pub fn behavior_policy(
    state: &[f64],
    mu_phi: &[f64],
    sigma_phi: &[f64],
    ensemble: &CriticEnsemble,
    config: &ExplorationConfig,
    eps: &[f64],
) -> Result<BehaviorPolicy> {
    if mu_phi.len() != sigma_phi.len() {
        return Err(Error::Config(
            "policy std length",
            mu_phi.len(),
            sigma_phi.len(),
        ));
    }
    let action: Vec<f64> = mu_phi.iter().map(|&u| tanh(u)).collect();
    let input = concat(state, &action);
    let act_dim = action.len();
    if input.len() != ensemble.input_dim() {
        return Err(Error::Config(
            "critic input width",
            ensemble.input_dim(),
            input.len(),
        ));
    }
    let nets = ensemble.online();
    let row = Matrix::from_vec(1, input.len(), input)?;
    let tape0 = nets[0].record(row.clone())?;
    let tape1 = nets[1].record(row)?;
    let z0 = tape0.output().row(0).to_vec();
    let z1 = tape1.output().row(0).to_vec();
    let q = [z0.as_slice(), z1.as_slice()];

    let ovd = ovd_from(q, config.beta);
    let current = current_from(q, ensemble.fractions(), config)?;
    let multiplier = exploration_multiplier(current.cdf(ovd.mean), config.c_norm);
    let mut diagnostics = BehaviorDiagnostics {
        epistemic_std: epistemic_std_from(q),
        aleatoric_std: aleatoric_std_from(q),
        multiplier,
        reversed: multiplier < 0.0,
        ..BehaviorDiagnostics::default()
    };

    if config.alpha == 0.0 {
        return Ok(BehaviorPolicy {
            mean: mu_phi.to_vec(),
            std: sigma_phi.to_vec(),
            diagnostics,
        });
    }

    let eps_mean = if eps.is_empty() {
        0.0
    } else {
        eps.iter().sum::<f64>() / eps.len() as f64
    };
    let [c0, c1] = ovd_sample_cotangent(q, config.beta, eps_mean);
    let g0 = nets[0].backward_input(tape0, &Matrix::from_vec(1, c0.len(), c0)?)?;
    let g1 = nets[1].backward_input(tape1, &Matrix::from_vec(1, c1.len(), c1)?)?;
    let offset = state.len();
    let grad: Vec<f64> = (0..act_dim)
        .map(|d| {
            let da = g0.get(0, offset + d) + g1.get(0, offset + d);
            da * (1.0 - action[d] * action[d])
        })
        .collect();

    if grad.iter().any(|g| !g.is_finite()) || !multiplier.is_finite() {
        diagnostics.fallback = true;
        return Ok(BehaviorPolicy {
            mean: mu_phi.to_vec(),
            std: sigma_phi.to_vec(),
            diagnostics,
        });
    }
    let mean = behavior_mean(mu_phi, config.alpha, multiplier, &grad);
    diagnostics.shift_norm = libm::sqrt(
        mean.iter()
            .zip(mu_phi)
            .map(|(a, b)| (a - b) * (a - b))
            .sum(),
    );
    Ok(BehaviorPolicy {
        mean,
        std: sigma_phi.to_vec(),
        diagnostics,
    })
}
