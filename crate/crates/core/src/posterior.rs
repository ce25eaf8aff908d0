//! Exact (quadrature) view of the softmax posterior for one-dimensional
//! static problems.
//!
//! For a scalar decision `u` with cost `J(u)`, temperature `lambda`, and a
//! Gaussian prior, the planners above sample from
//! `p*(u) ∝ exp(-J(u)/lambda) · N(u; mean, std²)`. On a 1D grid this density
//! can be computed to quadrature accuracy, which is what makes the sampling
//! planners testable against ground truth.

use crate::error::{Error, Result};

/// Minimum fraction of the prior's probability mass the grid must capture.
/// Below this the quadrature cannot represent the distribution it claims to
/// normalize, so construction fails instead of returning garbage.
pub const MIN_PRIOR_MASS: f64 = 0.25;

/// Default relative-height threshold for mode counting.
pub const MODE_REL_THRESHOLD: f64 = 0.05;

/// A uniform 1D grid with `n >= 2` points spanning `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("grid bounds [{lo}, {hi}] must be finite")));
        }
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "grid lower bound {lo} must be strictly below upper bound {hi}"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {n}")));
        }
        Ok(Grid1D { lo, hi, n })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    /// The `i`-th grid point. Endpoints are exact: `point(0) == lo` and
    /// `point(n-1) == hi`.
    pub fn point(&self, i: usize) -> f64 {
        let t = i as f64 / (self.n - 1) as f64;
        self.lo * (1.0 - t) + self.hi * t
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }
}

/// A normalized density sampled on a grid, together with the normalizer that
/// was divided out (computed after shifting the cost minimum to zero, so it
/// is finite for any finite costs).
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub normalizer: f64,
}

/// First and second central moments plus differential entropy of a grid
/// density, all by trapezoid quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub entropy: f64,
}

/// Gaussian probability density.
pub fn normal_pdf(u: f64, mean: f64, std: f64) -> f64 {
    let z = (u - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let sum: f64 = values.iter().sum();
    h * (sum - 0.5 * (values[0] + values[values.len() - 1]))
}

/// Computes the normalized density `exp(-J(u)/lambda) · N(u; mean, std²) / Z`
/// on `grid`.
///
/// Costs must be finite on every grid point. The grid must capture at least
/// [`MIN_PRIOR_MASS`] of the prior — a grid that misses the prior bulk would
/// silently renormalize a tail into a "distribution". If the shifted density
/// still underflows to zero everywhere (cost range far exceeding `lambda`
/// where the prior lives), construction reports a degenerate density rather
/// than dividing by zero.
pub fn grid_posterior(
    cost: impl Fn(f64) -> f64,
    prior_mean: f64,
    prior_std: f64,
    lambda: f64,
    grid: &Grid1D,
) -> Result<GridDensity> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda = {lambda} must be strictly positive and finite"
        )));
    }
    if !(prior_std > 0.0) || !prior_std.is_finite() || !prior_mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "prior N({prior_mean}, {prior_std}²) must have finite mean and positive finite std"
        )));
    }
    let points = grid.points();
    let mut costs = Vec::with_capacity(points.len());
    for (i, &u) in points.iter().enumerate() {
        let j = cost(u);
        if !j.is_finite() {
            return Err(Error::NonFinite { what: "cost on grid".into(), index: Some(i) });
        }
        costs.push(j);
    }
    let prior: Vec<f64> = points.iter().map(|&u| normal_pdf(u, prior_mean, prior_std)).collect();
    let h = grid.spacing();
    let prior_mass = trapezoid(&prior, h);
    if prior_mass < MIN_PRIOR_MASS {
        return Err(Error::NarrowGrid(format!(
            "grid [{}, {}] captures only {prior_mass:.6} of the prior N({prior_mean}, {prior_std}²) \
             (needs at least {MIN_PRIOR_MASS}); widen the grid or move it toward the prior",
            grid.lo(),
            grid.hi()
        )));
    }
    let j_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut values: Vec<f64> = costs
        .iter()
        .zip(&prior)
        .map(|(&j, &p)| ((j_min - j) / lambda).exp() * p)
        .collect();
    let normalizer = trapezoid(&values, h);
    if !(normalizer > 0.0) || !normalizer.is_finite() {
        return Err(Error::DegenerateDensity(format!(
            "density underflowed on the whole grid (shifted normalizer = {normalizer}); \
             increase lambda, refine the grid, or move the prior toward low costs"
        )));
    }
    for v in &mut values {
        *v /= normalizer;
    }
    Ok(GridDensity { grid: *grid, values, normalizer })
}

/// Mean, variance, and differential entropy of a grid density. The entropy
/// integrand uses the convention `0 · ln 0 = 0`.
pub fn posterior_moments(density: &GridDensity) -> Moments {
    let h = density.grid.spacing();
    let points = density.grid.points();
    let mean_integrand: Vec<f64> =
        points.iter().zip(&density.values).map(|(&u, &p)| u * p).collect();
    let mean = trapezoid(&mean_integrand, h);
    let var_integrand: Vec<f64> = points
        .iter()
        .zip(&density.values)
        .map(|(&u, &p)| (u - mean) * (u - mean) * p)
        .collect();
    let variance = trapezoid(&var_integrand, h);
    let ent_integrand: Vec<f64> = density
        .values
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .collect();
    let entropy = trapezoid(&ent_integrand, h);
    Moments { mean, variance, entropy }
}

/// Expectation `E[f(u)]` under a grid density, by trapezoid quadrature.
pub fn expected_value(density: &GridDensity, f: impl Fn(f64) -> f64) -> f64 {
    let h = density.grid.spacing();
    let integrand: Vec<f64> = density
        .grid
        .points()
        .iter()
        .zip(&density.values)
        .map(|(&u, &p)| f(u) * p)
        .collect();
    trapezoid(&integrand, h)
}

/// Counts interior strict local maxima whose height is at least
/// `rel_threshold` times the global maximum. `rel_threshold` must lie in
/// `(0, 1)`; [`MODE_REL_THRESHOLD`] is the conventional default.
pub fn count_modes(density: &GridDensity, rel_threshold: f64) -> Result<usize> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "mode threshold {rel_threshold} must lie strictly between 0 and 1"
        )));
    }
    let v = &density.values;
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = rel_threshold * max;
    let mut modes = 0;
    for i in 1..v.len() - 1 {
        if v[i] > v[i - 1] && v[i] > v[i + 1] && v[i] >= floor {
            modes += 1;
        }
    }
    Ok(modes)
}

/// Forward KL divergence `KL(p || q)` from a grid density to a Gaussian
/// `q = N(q_mean, q_std²)`, by trapezoid quadrature. Points where `p = 0`
/// contribute zero.
pub fn kl_forward(density: &GridDensity, q_mean: f64, q_std: f64) -> Result<f64> {
    if !(q_std > 0.0) || !q_std.is_finite() || !q_mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "KL reference N({q_mean}, {q_std}²) must have finite mean and positive finite std"
        )));
    }
    let h = density.grid.spacing();
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let integrand: Vec<f64> = density
        .grid
        .points()
        .iter()
        .zip(&density.values)
        .map(|(&u, &p)| {
            if p > 0.0 {
                let z = (u - q_mean) / q_std;
                let log_q = -half_ln_2pi - q_std.ln() - 0.5 * z * z;
                p * (p.ln() - log_q)
            } else {
                0.0
            }
        })
        .collect();
    Ok(trapezoid(&integrand, h))
}
