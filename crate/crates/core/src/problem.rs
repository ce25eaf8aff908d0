//! Control problems and deterministic rollouts.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Discrete-time dynamics: `x_{t+1} = f(x_t, u_t)`.
pub type DynamicsFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync;
/// Stage cost `c(x_t, u_t, t)`.
pub type StageCostFn = dyn Fn(&DVector<f64>, &DVector<f64>, usize) -> f64 + Send + Sync;
/// Terminal cost `c_T(x_T)`.
pub type TerminalCostFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;

/// An open-loop control sequence: one input vector per horizon step,
/// stored as a `horizon x input_dim` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence(DMatrix<f64>);

impl ControlSequence {
    pub fn new(inputs: DMatrix<f64>) -> Self {
        ControlSequence(inputs)
    }

    pub fn zeros(horizon: usize, input_dim: usize) -> Self {
        ControlSequence(DMatrix::zeros(horizon, input_dim))
    }

    pub fn horizon(&self) -> usize {
        self.0.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// The input applied at step `t`, as a column vector.
    pub fn step(&self, t: usize) -> DVector<f64> {
        self.0.row(t).transpose()
    }
}

/// A finite-horizon control problem: dynamics, stage/terminal costs, and
/// elementwise input bounds (`±inf` for unconstrained components).
pub struct Problem {
    horizon: usize,
    state_dim: usize,
    input_dim: usize,
    dynamics: Box<DynamicsFn>,
    stage_cost: Box<StageCostFn>,
    terminal_cost: Box<TerminalCostFn>,
    input_lower: DVector<f64>,
    input_upper: DVector<f64>,
}

/// The result of simulating one control sequence: the visited states
/// (`horizon+1` rows, first row is the initial state), the inputs that were
/// actually applied (after clamping), and their accumulated cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: DMatrix<f64>,
    pub inputs: ControlSequence,
    pub total_cost: f64,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("horizon", &self.horizon)
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .field("input_lower", &self.input_lower)
            .field("input_upper", &self.input_upper)
            .finish_non_exhaustive()
    }
}

impl Problem {
    /// Builds an unconstrained problem. `horizon`, `state_dim` and
    /// `input_dim` must all be at least 1.
    pub fn new(
        horizon: usize,
        state_dim: usize,
        input_dim: usize,
        dynamics: Box<DynamicsFn>,
        stage_cost: Box<StageCostFn>,
        terminal_cost: Box<TerminalCostFn>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if state_dim == 0 || input_dim == 0 {
            return Err(Error::InvalidArgument(
                "state and input dimensions must be at least 1".into(),
            ));
        }
        Ok(Problem {
            horizon,
            state_dim,
            input_dim,
            dynamics,
            stage_cost,
            terminal_cost,
            input_lower: DVector::from_element(input_dim, f64::NEG_INFINITY),
            input_upper: DVector::from_element(input_dim, f64::INFINITY),
        })
    }

    /// Sets elementwise input bounds. Each lower bound must not exceed the
    /// matching upper bound; bounds must not be NaN.
    pub fn with_input_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != self.input_dim || upper.len() != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "input bounds have lengths {} and {}, expected {}",
                lower.len(),
                upper.len(),
                self.input_dim
            )));
        }
        for j in 0..self.input_dim {
            if lower[j].is_nan() || upper[j].is_nan() || lower[j] > upper[j] {
                return Err(Error::InvalidArgument(format!(
                    "invalid input bounds at component {j}: [{}, {}]",
                    lower[j], upper[j]
                )));
            }
        }
        self.input_lower = lower;
        self.input_upper = upper;
        Ok(self)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn input_lower(&self) -> &DVector<f64> {
        &self.input_lower
    }

    pub fn input_upper(&self) -> &DVector<f64> {
        &self.input_upper
    }

    /// Evaluates the stage cost at `(x, u, t)`.
    pub fn stage_cost(&self, x: &DVector<f64>, u: &DVector<f64>, t: usize) -> f64 {
        (self.stage_cost)(x, u, t)
    }

    /// Evaluates the terminal cost at `x`.
    pub fn terminal_cost(&self, x: &DVector<f64>) -> f64 {
        (self.terminal_cost)(x)
    }

    /// Advances the dynamics one step.
    pub fn dynamics_step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.dynamics)(x, u)
    }

    /// Clamps every input of a sequence into the problem's bounds.
    /// Idempotent: clamping a clamped sequence is a no-op.
    pub fn clamp(&self, inputs: &ControlSequence) -> Result<ControlSequence> {
        self.check_inputs(inputs)?;
        let mut m = inputs.matrix().clone();
        for t in 0..m.nrows() {
            for j in 0..m.ncols() {
                m[(t, j)] = m[(t, j)].clamp(self.input_lower[j], self.input_upper[j]);
            }
        }
        Ok(ControlSequence::new(m))
    }

    /// Simulates one control sequence from `x0`. Inputs are clamped into the
    /// problem bounds *before* they reach the dynamics or any cost term, and
    /// the clamped sequence is what the returned trajectory carries.
    ///
    /// The accumulated cost is the sum of stage costs along the visited
    /// states plus the terminal cost; it is reported as-is, even if a cost
    /// closure returns a non-finite value. A non-finite *state*, by contrast,
    /// is an error identifying the step that produced it.
    pub fn rollout(&self, x0: &DVector<f64>, inputs: &ControlSequence) -> Result<Trajectory> {
        if x0.len() != self.state_dim {
            return Err(Error::ShapeMismatch(format!(
                "initial state has length {}, expected {}",
                x0.len(),
                self.state_dim
            )));
        }
        let inputs = self.clamp(inputs)?;
        let mut states = DMatrix::zeros(self.horizon + 1, self.state_dim);
        states.row_mut(0).copy_from(&x0.transpose());
        let mut x = x0.clone();
        let mut total_cost = 0.0;
        for t in 0..self.horizon {
            let u = inputs.step(t);
            total_cost += (self.stage_cost)(&x, &u, t);
            x = (self.dynamics)(&x, &u);
            if x.len() != self.state_dim {
                return Err(Error::ShapeMismatch(format!(
                    "dynamics returned a state of length {} at step {t}, expected {}",
                    x.len(),
                    self.state_dim
                )));
            }
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { what: "state after dynamics".into(), index: Some(t) });
            }
            states.row_mut(t + 1).copy_from(&x.transpose());
        }
        total_cost += (self.terminal_cost)(&x);
        Ok(Trajectory { states, inputs, total_cost })
    }

    /// Recomputes the cost of an existing trajectory (sum of stage costs plus
    /// terminal cost). Unlike [`Problem::rollout`], a non-finite total is an
    /// error here: this is the checked accessor used to audit solutions.
    pub fn trajectory_cost(&self, trajectory: &Trajectory) -> Result<f64> {
        let states = &trajectory.states;
        if states.nrows() != self.horizon + 1 || states.ncols() != self.state_dim {
            return Err(Error::ShapeMismatch(format!(
                "trajectory states are {}x{}, expected {}x{}",
                states.nrows(),
                states.ncols(),
                self.horizon + 1,
                self.state_dim
            )));
        }
        self.check_inputs(&trajectory.inputs)?;
        let mut total = 0.0;
        for t in 0..self.horizon {
            let x = states.row(t).transpose();
            let u = trajectory.inputs.step(t);
            total += (self.stage_cost)(&x, &u, t);
        }
        total += (self.terminal_cost)(&states.row(self.horizon).transpose());
        if !total.is_finite() {
            return Err(Error::NonFinite { what: "trajectory cost".into(), index: None });
        }
        Ok(total)
    }

    fn check_inputs(&self, inputs: &ControlSequence) -> Result<()> {
        if inputs.horizon() != self.horizon || inputs.input_dim() != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "control sequence is {}x{}, expected {}x{}",
                inputs.horizon(),
                inputs.input_dim(),
                self.horizon,
                self.input_dim
            )));
        }
        Ok(())
    }
}
