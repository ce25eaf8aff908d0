//! Softmax weighting of trajectory costs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::problem::ControlSequence;

/// Normalized weights over a cost batch plus their effective sample size
/// `1 / sum(w^2)` (`K` for uniform weights, 1 for a one-hot vector).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub ess: f64,
}

/// Computes `w_k ∝ exp(-costs[k] / lambda)`, normalized to sum to one.
///
/// The exponents are shifted by the batch minimum before exponentiation, so
/// the largest exponent is exactly zero: the weights are invariant (bit for
/// bit) under adding a constant to every cost, the normalizer is at least
/// one, and overflow is impossible for any finite costs.
pub fn softmax_weights(costs: &[f64], lambda: f64) -> Result<WeightVector> {
    if costs.is_empty() {
        return Err(Error::InvalidArgument("cost batch is empty".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda = {lambda} must be strictly positive and finite"
        )));
    }
    if let Some(i) = costs.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite { what: "batch cost".into(), index: Some(i) });
    }
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = costs.iter().map(|&c| ((min - c) / lambda).exp()).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    Ok(WeightVector { weights, ess })
}

/// The weighted average of a batch of control sequences. Weights must be a
/// convex combination matching the batch length; the accumulation runs in
/// index order so the result does not depend on thread count.
pub fn weighted_mean(samples: &[ControlSequence], weights: &WeightVector) -> Result<ControlSequence> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("sample batch is empty".into()));
    }
    if samples.len() != weights.weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} samples but {} weights",
            samples.len(),
            weights.weights.len()
        )));
    }
    let (t, m) = (samples[0].horizon(), samples[0].input_dim());
    let mut acc = DMatrix::zeros(t, m);
    for (k, s) in samples.iter().enumerate() {
        if s.horizon() != t || s.input_dim() != m {
            return Err(Error::ShapeMismatch(format!(
                "sample {k} is {}x{}, expected {t}x{m}",
                s.horizon(),
                s.input_dim()
            )));
        }
        acc += s.matrix() * weights.weights[k];
    }
    Ok(ControlSequence::new(acc))
}
