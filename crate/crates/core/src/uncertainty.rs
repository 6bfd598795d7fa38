//! Epistemic and aleatoric uncertainty from the two-critic ensemble.
//!
//! Both estimates use population variances:
//!
//! * epistemic: `σ² = mean_i var_k Z_i^k`, the disagreement between critics;
//! * aleatoric: `σ² = var_i mean_k Z_i^k`, the spread of the averaged
//!   return distribution.

use crate::critic::CriticEnsemble;
use crate::math::sqrt;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyEstimate {
    pub epistemic_std: f64,
    pub aleatoric_std: f64,
}

/// Square root of the quantile-averaged variance across the two critics.
pub fn epistemic_std_from(quantiles: [&[f64]; 2]) -> f64 {
    let n = quantiles[0].len();
    if n == 0 {
        return 0.0;
    }
    // var of two values {a, b} is ((a − b)/2)²
    let sum: f64 = quantiles[0]
        .iter()
        .zip(quantiles[1])
        .map(|(a, b)| {
            let half = 0.5 * (a - b);
            half * half
        })
        .sum();
    sqrt(sum / n as f64)
}

/// Square root of the variance over quantile indices of the per-quantile
/// ensemble mean.
pub fn aleatoric_std_from(quantiles: [&[f64]; 2]) -> f64 {
    let n = quantiles[0].len();
    if n == 0 {
        return 0.0;
    }
    let mean_of = |i: usize| 0.5 * (quantiles[0][i] + quantiles[1][i]);
    let mu = (0..n).map(mean_of).sum::<f64>() / n as f64;
    let var = (0..n)
        .map(|i| {
            let d = mean_of(i) - mu;
            d * d
        })
        .sum::<f64>()
        / n as f64;
    sqrt(var)
}

pub fn estimate_from(quantiles: [&[f64]; 2]) -> UncertaintyEstimate {
    UncertaintyEstimate {
        epistemic_std: epistemic_std_from(quantiles),
        aleatoric_std: aleatoric_std_from(quantiles),
    }
}

pub fn epistemic_std(state: &[f64], action: &[f64], ensemble: &CriticEnsemble) -> Result<f64> {
    let [a, b] = ensemble.evaluate(state, action)?;
    Ok(epistemic_std_from([&a, &b]))
}

pub fn aleatoric_std(state: &[f64], action: &[f64], ensemble: &CriticEnsemble) -> Result<f64> {
    let [a, b] = ensemble.evaluate(state, action)?;
    Ok(aleatoric_std_from([&a, &b]))
}

pub fn estimate(
    state: &[f64],
    action: &[f64],
    ensemble: &CriticEnsemble,
) -> Result<UncertaintyEstimate> {
    let [a, b] = ensemble.evaluate(state, action)?;
    Ok(estimate_from([&a, &b]))
}
