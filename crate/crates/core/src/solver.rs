//! One-step sampling planners: MPPI and a random-shooting baseline.
//!
//! Both planners share the same pipeline — sample control sequences from a
//! Gaussian prior, clamp them into the input bounds, roll each one out, and
//! score it — and differ only in how they turn the scored batch into a
//! solution. MPPI returns the softmax-weighted average of the (clamped)
//! batch; random shooting returns the single cheapest sample. With the same
//! seed the two planners therefore see the *same* batch, which makes their
//! small-lambda agreement testable exactly.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{ControlSequence, Problem};
use crate::sampling::{GaussianSequencePolicy, SeedSpec, WarmStartFill};
use crate::weights::{softmax_weights, weighted_mean, WeightVector};

/// Default sample count per planning step.
pub const DEFAULT_SAMPLES: usize = 1024;
/// Default planning horizon.
pub const DEFAULT_HORIZON: usize = 30;
/// Default softmax temperature.
pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Which planner turns a scored sample batch into a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Planner {
    Mppi,
    RandomShooting,
}

impl Planner {
    pub fn as_str(self) -> &'static str {
        match self {
            Planner::Mppi => "mppi",
            Planner::RandomShooting => "random_shooting",
        }
    }
}

impl std::str::FromStr for Planner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mppi" => Ok(Planner::Mppi),
            "random_shooting" => Ok(Planner::RandomShooting),
            other => Err(Error::InvalidArgument(format!(
                "unknown planner '{other}' (expected 'mppi' or 'random_shooting')"
            ))),
        }
    }
}

/// Per-step planner settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of control sequences sampled per step.
    pub samples: usize,
    /// Softmax temperature; small values concentrate on the best sample,
    /// large values follow the prior.
    pub lambda: f64,
    /// Sampling standard deviation per input component.
    pub std: DVector<f64>,
    /// How the warm start fills its final step.
    pub warm_start_fill: WarmStartFill,
    /// Randomness source for this step.
    pub seed: SeedSpec,
}

impl SolverConfig {
    pub fn new(
        samples: usize,
        lambda: f64,
        std: DVector<f64>,
        warm_start_fill: WarmStartFill,
        seed: SeedSpec,
    ) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda = {lambda} must be strictly positive and finite"
            )));
        }
        for j in 0..std.len() {
            if !(std[j] > 0.0 && std[j].is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "std[{j}] = {} must be strictly positive and finite",
                    std[j]
                )));
            }
        }
        Ok(SolverConfig { samples, lambda, std, warm_start_fill, seed })
    }
}

/// What one planning step produced.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// The planned control sequence (already within the input bounds).
    pub solution: ControlSequence,
    /// Cost of the solution, recomputed by an independent rollout.
    pub solution_cost: f64,
    /// Cost of every sample, in sample order. Samples whose rollout produced
    /// a non-finite state appear as `+inf` and are excluded from planning.
    pub batch_costs: Vec<f64>,
    /// Effective sample size of the weights (1 for random shooting).
    pub ess: f64,
    /// Smallest finite batch cost.
    pub min_cost: f64,
    /// Mean of the finite batch costs.
    pub mean_cost: f64,
    /// Wall-clock duration of the step. Never used in data comparisons.
    pub wall_time: Duration,
}

/// One MPPI step: the solution is the softmax-weighted average of the
/// clamped sample batch, with weights `exp(-cost / lambda)`.
pub fn mppi_step(
    problem: &Problem,
    x0: &DVector<f64>,
    prior_mean: &ControlSequence,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let start = Instant::now();
    let (sequences, costs) = sample_and_evaluate(problem, x0, prior_mean, cfg)?;
    let finite = finite_indices(&costs)?;
    let finite_costs: Vec<f64> = finite.iter().map(|&k| costs[k]).collect();
    let weights = softmax_weights(&finite_costs, cfg.lambda)?;
    let finite_seqs: Vec<ControlSequence> =
        finite.iter().map(|&k| sequences[k].clone()).collect();
    let solution = weighted_mean(&finite_seqs, &weights)?;
    finish(problem, x0, solution, costs, weights.ess, start)
}

/// One random-shooting step: the solution is the cheapest clamped sample
/// (ties broken toward the lowest sample index).
pub fn random_shooting_step(
    problem: &Problem,
    x0: &DVector<f64>,
    prior_mean: &ControlSequence,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let start = Instant::now();
    let (sequences, costs) = sample_and_evaluate(problem, x0, prior_mean, cfg)?;
    let finite = finite_indices(&costs)?;
    let best = finite
        .iter()
        .copied()
        .fold(finite[0], |best, k| if costs[k] < costs[best] { k } else { best });
    let solution = sequences[best].clone();
    finish(problem, x0, solution, costs, 1.0, start)
}

/// Dispatches to the planner named in `planner`.
pub fn plan_step(
    problem: &Problem,
    x0: &DVector<f64>,
    prior_mean: &ControlSequence,
    cfg: &SolverConfig,
    planner: Planner,
) -> Result<SolveReport> {
    match planner {
        Planner::Mppi => mppi_step(problem, x0, prior_mean, cfg),
        Planner::RandomShooting => random_shooting_step(problem, x0, prior_mean, cfg),
    }
}

/// Samples `cfg.samples` sequences around `prior_mean`, clamps them, and
/// rolls each one out. Returns the clamped sequences and their costs, in
/// sample order. A rollout that produces a non-finite state contributes the
/// clamped sequence with cost `+inf`; any other rollout error aborts.
fn sample_and_evaluate(
    problem: &Problem,
    x0: &DVector<f64>,
    prior_mean: &ControlSequence,
    cfg: &SolverConfig,
) -> Result<(Vec<ControlSequence>, Vec<f64>)> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    if prior_mean.horizon() != problem.horizon() || prior_mean.input_dim() != problem.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "prior mean is {}x{}, problem expects {}x{}",
            prior_mean.horizon(),
            prior_mean.input_dim(),
            problem.horizon(),
            problem.input_dim()
        )));
    }
    let policy = GaussianSequencePolicy::new(prior_mean.matrix().clone(), cfg.std.clone())?;
    let samples = policy.sample_batch(cfg.samples, &cfg.seed);
    let evaluated: Result<Vec<(ControlSequence, f64)>> = samples
        .into_par_iter()
        .map(|seq| match problem.rollout(x0, &seq) {
            Ok(traj) => Ok((traj.inputs, traj.total_cost)),
            Err(Error::NonFinite { .. }) => Ok((problem.clamp(&seq)?, f64::INFINITY)),
            Err(other) => Err(other),
        })
        .collect();
    Ok(evaluated?.into_iter().unzip())
}

fn finite_indices(costs: &[f64]) -> Result<Vec<usize>> {
    let finite: Vec<usize> =
        (0..costs.len()).filter(|&k| costs[k].is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::SolverFailure(format!(
            "all {} sampled trajectories had non-finite cost",
            costs.len()
        )));
    }
    Ok(finite)
}

fn finish(
    problem: &Problem,
    x0: &DVector<f64>,
    solution: ControlSequence,
    costs: Vec<f64>,
    ess: f64,
    start: Instant,
) -> Result<SolveReport> {
    let trajectory = problem.rollout(x0, &solution)?;
    let solution_cost = problem.trajectory_cost(&trajectory)?;
    let finite: Vec<f64> = costs.iter().copied().filter(|c| c.is_finite()).collect();
    let min_cost = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_cost = finite.iter().sum::<f64>() / finite.len() as f64;
    Ok(SolveReport {
        solution,
        solution_cost,
        batch_costs: costs,
        ess,
        min_cost,
        mean_cost,
        wall_time: start.elapsed(),
    })
}

/// Convenience: softmax weights of a report's finite batch costs, matching
/// what the MPPI step used internally.
pub fn report_weights(report: &SolveReport, lambda: f64) -> Result<WeightVector> {
    let finite: Vec<f64> =
        report.batch_costs.iter().copied().filter(|c| c.is_finite()).collect();
    softmax_weights(&finite, lambda)
}
