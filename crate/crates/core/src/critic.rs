//! Quantile critics with a clipped-double ensemble.
//!
//! Each critic maps a concatenated `(state, action)` vector to `N` return
//! quantiles at the fixed midpoints `τ̂_i = (i − ½)/N`. Two online critics
//! are trained against a shared target built from two slowly-moving target
//! copies.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::nn::{Adam, AdamConfig, Matrix, Mlp};
use crate::{Error, Result};

/// Quantile fractions `τ̂_i = (τ_{i−1} + τ_i)/2` on the uniform grid `τ_i = i/N`.
pub fn quantile_midpoints(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("quantile count", 1, 0));
    }
    Ok((1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect())
}

/// `N` return values at strictly increasing quantile fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileDistribution {
    values: Vec<f64>,
    fractions: Vec<f64>,
}

impl QuantileDistribution {
    /// Distribution at the standard midpoints for `values.len()` quantiles.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let fractions = quantile_midpoints(values.len())?;
        Ok(Self { values, fractions })
    }

    pub fn with_fractions(values: Vec<f64>, fractions: Vec<f64>) -> Result<Self> {
        if values.len() != fractions.len() {
            return Err(Error::Config(
                "quantile fraction count",
                values.len(),
                fractions.len(),
            ));
        }
        if values.is_empty() {
            return Err(Error::Config("quantile count", 1, 0));
        }
        if fractions.iter().any(|&t| !(t > 0.0 && t < 1.0))
            || fractions.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Usage(
                "quantile fractions must be strictly increasing in (0, 1)",
            ));
        }
        Ok(Self { values, fractions })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        crate::math::mean(&self.values)
    }

    /// Empirical CDF: fraction of quantile values `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.iter().filter(|&&v| v <= x).count() as f64 / self.values.len() as f64
    }
}

/// `ρ_τ(u) = u·|τ − 1{u < 0}|`.
pub fn pinball(tau: f64, u: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// Quantile-regression loss `(1/N)·Σ_i Σ_j ρ_{τ̂_j}(target_i − predicted_j)`.
pub fn pinball_loss(predicted: &QuantileDistribution, targets: &[f64]) -> Result<f64> {
    if targets.len() != predicted.len() {
        return Err(Error::Usage(
            "pinball loss needs one target per predicted quantile",
        ));
    }
    let n = targets.len() as f64;
    let mut total = 0.0;
    for &t in targets {
        for (&p, &tau) in predicted.values.iter().zip(&predicted.fractions) {
            total += pinball(tau, t - p);
        }
    }
    Ok(total / n)
}

/// Pinball loss for one row plus its gradient with respect to the predictions,
/// scaled by `scale`. The subgradient at a zero residual is `−τ`.
fn pinball_row(
    predicted: &[f64],
    fractions: &[f64],
    targets: &[f64],
    scale: f64,
    grad: &mut [f64],
) -> f64 {
    let n = targets.len() as f64;
    let mut total = 0.0;
    for ((&p, &tau), g) in predicted.iter().zip(fractions).zip(grad.iter_mut()) {
        let mut below = 0usize;
        for &t in targets {
            let u = t - p;
            total += pinball(tau, u);
            if u < 0.0 {
                below += 1;
            }
        }
        // ∂ρ_τ(t − p)/∂p = −(τ − 1{u<0})
        *g = -scale * (targets.len() as f64 * tau - below as f64) / n;
    }
    total / n
}

/// Training objective of the critics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticLoss {
    /// Quantile regression with the pinball loss.
    Quantile,
    /// Squared error, for a single-output scalar critic.
    MeanSquared,
}

/// Two online quantile critics and their target copies.
#[derive(Debug, Clone)]
pub struct CriticEnsemble {
    online: [Mlp; 2],
    target: [Mlp; 2],
    optim: [Adam; 2],
    fractions: Vec<f64>,
    loss: CriticLoss,
}

impl CriticEnsemble {
    /// Builds both critics with layer widths `input_dim → hidden… → quantiles`.
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        quantiles: usize,
        adam: AdamConfig,
        loss: CriticLoss,
        rng: &mut R,
    ) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(quantiles);
        let a = Mlp::new(&sizes, rng)?;
        let b = Mlp::new(&sizes, rng)?;
        Self::from_networks([a, b], adam, loss)
    }

    /// Wraps two existing critics; targets start as exact copies.
    pub fn from_networks(online: [Mlp; 2], adam: AdamConfig, loss: CriticLoss) -> Result<Self> {
        if !online[0].same_architecture(&online[1]) {
            return Err(Error::Usage("ensemble critics must share an architecture"));
        }
        let quantiles = online[0].output_dim();
        if loss == CriticLoss::MeanSquared && quantiles != 1 {
            return Err(Error::Config("scalar critic output width", 1, quantiles));
        }
        let fractions = quantile_midpoints(quantiles)?;
        let n = online[0].num_params();
        Ok(Self {
            target: online.clone(),
            optim: [Adam::new(adam, n), Adam::new(adam, n)],
            online,
            fractions,
            loss,
        })
    }

    pub fn quantiles(&self) -> usize {
        self.fractions.len()
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn input_dim(&self) -> usize {
        self.online[0].input_dim()
    }

    pub fn online(&self) -> &[Mlp; 2] {
        &self.online
    }

    pub fn online_mut(&mut self) -> &mut [Mlp; 2] {
        &mut self.online
    }

    pub fn target(&self) -> &[Mlp; 2] {
        &self.target
    }

    /// Quantile outputs of both online critics at `(state, action)`.
    pub fn evaluate(&self, state: &[f64], action: &[f64]) -> Result<[Vec<f64>; 2]> {
        let input = concat(state, action);
        Ok([
            self.online[0].forward(&input)?,
            self.online[1].forward(&input)?,
        ])
    }

    /// Both online critics as [`QuantileDistribution`]s.
    pub fn distributions(
        &self,
        state: &[f64],
        action: &[f64],
    ) -> Result<[QuantileDistribution; 2]> {
        let [a, b] = self.evaluate(state, action)?;
        Ok([
            QuantileDistribution::with_fractions(a, self.fractions.clone())?,
            QuantileDistribution::with_fractions(b, self.fractions.clone())?,
        ])
    }

    /// Target-critic outputs for a batch of concatenated `(state, action)` rows.
    pub fn target_batch(&self, inputs: &Matrix) -> Result<[Matrix; 2]> {
        Ok([
            self.target[0].forward_batch(inputs)?,
            self.target[1].forward_batch(inputs)?,
        ])
    }

    /// One optimizer step for each online critic toward the shared `targets`
    /// (`batch × N`). Returns the two batch-mean losses.
    pub fn update(&mut self, inputs: &Matrix, targets: &Matrix) -> Result<[f64; 2]> {
        let n = self.quantiles();
        if targets.cols() != n || targets.rows() != inputs.rows() {
            return Err(Error::Config(
                "critic target shape",
                inputs.rows() * n,
                targets.rows() * targets.cols(),
            ));
        }
        let batch = inputs.rows();
        let scale = 1.0 / batch as f64;
        let mut losses = [0.0; 2];
        for (k, loss) in losses.iter_mut().enumerate() {
            let tape = self.online[k].record(inputs.clone())?;
            let mut d_out = Matrix::zeros(batch, n);
            let mut total = 0.0;
            for r in 0..batch {
                let pred = tape.output().row(r);
                let tgt = targets.row(r);
                total += match self.loss {
                    CriticLoss::Quantile => {
                        pinball_row(pred, &self.fractions, tgt, scale, d_out.row_mut(r))
                    }
                    CriticLoss::MeanSquared => {
                        let e = pred[0] - tgt[0];
                        d_out.row_mut(r)[0] = scale * e;
                        0.5 * e * e
                    }
                };
            }
            *loss = total * scale;
            let grads = self.online[k].backward_params(tape, &d_out)?;
            self.optim[k].step(self.online[k].params_mut(), &grads)?;
        }
        Ok(losses)
    }

    /// Blends both target critics toward their online counterparts.
    pub fn soft_update_targets(&mut self, tau: f64) -> Result<()> {
        for k in 0..2 {
            soft_update(&mut self.target[k], &self.online[k], tau)?;
        }
        Ok(())
    }
}

pub(crate) fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// Distributional soft Bellman target for one transition.
///
/// `target_i = r + γ·(1 − done)·(min_k Z̄_i^k − entropy_coeff·log π(a′|s′))`,
/// with the minimum taken per quantile across the two target critics.
pub fn soft_bellman_targets(
    reward: f64,
    done: bool,
    gamma: f64,
    entropy_coeff: f64,
    next_quantiles: [&[f64]; 2],
    next_log_prob: f64,
    out: &mut [f64],
) {
    if done || gamma == 0.0 {
        out.iter_mut().for_each(|t| *t = reward);
        return;
    }
    for ((t, &a), &b) in out.iter_mut().zip(next_quantiles[0]).zip(next_quantiles[1]) {
        *t = reward + gamma * (a.min(b) - entropy_coeff * next_log_prob);
    }
}

/// Bootstrapped quantile targets for one transition, drawing `a′` from the
/// target policy at `s′` and evaluating the target critics there.
pub fn td_target_quantiles<R: Rng + ?Sized>(
    transition: &crate::agent::Transition,
    ensemble: &CriticEnsemble,
    policy: &crate::agent::PolicyHead,
    gamma: f64,
    entropy_coeff: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; ensemble.quantiles()];
    if transition.done || gamma == 0.0 {
        soft_bellman_targets(
            transition.reward,
            true,
            gamma,
            entropy_coeff,
            [&[], &[]],
            0.0,
            &mut out,
        );
        return Ok(out);
    }
    let sample = policy.sample(&transition.next_state, rng)?;
    let input = concat(&transition.next_state, &sample.action);
    let z1 = ensemble.target[0].forward(&input)?;
    let z2 = ensemble.target[1].forward(&input)?;
    soft_bellman_targets(
        transition.reward,
        false,
        gamma,
        entropy_coeff,
        [&z1, &z2],
        sample.log_prob,
        &mut out,
    );
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("td target"));
    }
    Ok(out)
}

/// Clipped-double Q estimate: `min_k mean_i Z_i^k`.
pub fn q_from_quantiles(quantiles: [&[f64]; 2]) -> f64 {
    crate::math::mean(quantiles[0]).min(crate::math::mean(quantiles[1]))
}

/// `Q(s, a)` from the online critics.
pub fn q_value(state: &[f64], action: &[f64], ensemble: &CriticEnsemble) -> Result<f64> {
    let [a, b] = ensemble.evaluate(state, action)?;
    Ok(q_from_quantiles([&a, &b]))
}

/// `target ← τ·online + (1 − τ)·target`, entrywise.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::OutOfRange("soft update coefficient", tau));
    }
    if !target.same_architecture(online) {
        return Err(Error::Usage("soft update between different architectures"));
    }
    for (t, &o) in target.params_mut().iter_mut().zip(online.params()) {
        *t = tau * o + (1.0 - tau) * *t;
    }
    Ok(())
}
