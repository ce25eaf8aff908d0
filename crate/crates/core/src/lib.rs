//! Sampling-based model predictive control.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`problem`] — control problems as dynamics/cost closures, with input
//!   clamping and deterministic rollouts;
//! * [`sampling`] — Gaussian control-sequence policies with counter-based
//!   seeding, so every sample is reproducible independent of batch size and
//!   thread count;
//! * [`weights`] — numerically stabilized softmax weighting of trajectory
//!   costs and the effective sample size;
//! * [`solver`] — one planning step of MPPI and of a random-shooting
//!   baseline, sharing the same sample/rollout pipeline;
//! * [`posterior`] — an exact (quadrature) view of the same softmax posterior
//!   for one-dimensional static problems, used as an oracle for the samplers;
//! * [`sim`] — a 2D point-mass environment and the receding-horizon loop,
//!   with replayable run logs.

pub use nalgebra;

pub mod error;
pub mod numfmt;
pub mod posterior;
pub mod problem;
pub mod sampling;
pub mod sim;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
pub use problem::{ControlSequence, Problem, Trajectory};
pub use sampling::{GaussianSequencePolicy, SeedSpec, WarmStartFill};
pub use solver::{Planner, SolveReport, SolverConfig};
pub use weights::WeightVector;
