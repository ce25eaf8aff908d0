//! 2D point-mass environment and the receding-horizon control loop.
//!
//! The environment is plain data — start/goal, circular obstacles, workspace
//! bounds, plant mismatch and noise knobs — so a finished run can be replayed
//! bit for bit from its logged configuration. The planner's model of the
//! world is also data ([`PlannerModel`]): a horizon plus cost weights, from
//! which the actual [`Problem`] closures are built on demand.
//!
//! State layout is `[px, py, vx, vy]`, inputs are accelerations `[ux, uy]`,
//! and integration is symplectic Euler: velocity first, then position with
//! the *new* velocity.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numfmt::sig17;
use crate::problem::{ControlSequence, Problem};
use crate::sampling::{shift_warm_start, SeedSpec};
use crate::solver::{plan_step, Planner, SolverConfig};

/// Stream ids at and above this offset are reserved for plant process noise;
/// planning steps use streams `base + step` below it.
const NOISE_STREAM_BASE: u64 = 1 << 32;

/// A circular obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl Obstacle {
    /// Strict interior test.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let (dx, dy) = (px - self.x, py - self.y);
        dx * dx + dy * dy < self.radius * self.radius
    }
}

/// Axis-aligned workspace rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspaceBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl WorkspaceBounds {
    pub fn contains(&self, px: f64, py: f64) -> bool {
        px >= self.x_min && px <= self.x_max && py >= self.y_min && py <= self.y_max
    }
}

/// Everything the closed loop needs to reproduce a run: plant, task, and
/// termination rules. Leaving an obstacle's interior is never allowed — a
/// step that ends inside one terminates the run as a collision. Leaving the
/// workspace is allowed but penalized through the planner's cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub dt: f64,
    /// Initial `[px, py, vx, vy]`.
    pub start: [f64; 4],
    pub goal: [f64; 2],
    /// Distance to the goal at which the run counts as arrived.
    pub goal_radius: f64,
    pub obstacles: Vec<Obstacle>,
    pub bounds: WorkspaceBounds,
    pub max_steps: usize,
    /// Symmetric per-axis acceleration limit (also the planner's input bound).
    pub accel_max: f64,
    /// Per-component std of additive Gaussian noise on the plant state.
    pub process_noise_std: [f64; 4],
    /// Plant-side scaling of commanded accelerations; the planner always
    /// assumes 1, so values away from 1 create model mismatch.
    pub plant_accel_scale: f64,
}

impl Environment {
    /// The standard benchmark scene: a goal 4 m ahead behind a centered
    /// circular obstacle, in a bounded corridor.
    pub fn benchmark() -> Self {
        Environment {
            dt: 0.1,
            start: [0.0, 0.0, 0.0, 0.0],
            goal: [4.0, 0.0],
            goal_radius: 0.2,
            obstacles: vec![Obstacle { x: 2.0, y: 0.0, radius: 0.5 }],
            bounds: WorkspaceBounds { x_min: -1.0, x_max: 5.0, y_min: -2.0, y_max: 2.0 },
            max_steps: 80,
            accel_max: 2.0,
            process_noise_std: [0.0; 4],
            plant_accel_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.goal_radius > 0.0) || !self.goal_radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "goal radius = {} must be positive",
                self.goal_radius
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
        }
        if !(self.accel_max > 0.0) || !self.accel_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "accel limit = {} must be positive",
                self.accel_max
            )));
        }
        if !(self.bounds.x_min < self.bounds.x_max) || !(self.bounds.y_min < self.bounds.y_max) {
            return Err(Error::InvalidArgument("workspace bounds are empty".into()));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.radius > 0.0) || !o.radius.is_finite() || !o.x.is_finite() || !o.y.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "obstacle {i} ({}, {}, r={}) is invalid",
                    o.x, o.y, o.radius
                )));
            }
        }
        for (i, v) in self.start.iter().chain(self.goal.iter()).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "environment geometry".into(), index: Some(i) });
            }
        }
        for (i, s) in self.process_noise_std.iter().enumerate() {
            if !(*s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "process noise std[{i}] = {s} must be non-negative"
                )));
            }
        }
        if !(self.plant_accel_scale >= 0.0) || !self.plant_accel_scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "plant accel scale = {} must be non-negative",
                self.plant_accel_scale
            )));
        }
        Ok(())
    }

    /// Advances the *plant* one step: symplectic Euler with the mismatch
    /// scale applied to the commanded acceleration, then additive Gaussian
    /// process noise drawn from the run's noise stream for `step`.
    pub fn plant_step(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        master_seed: u64,
        step: usize,
    ) -> DVector<f64> {
        let a = self.plant_accel_scale;
        let ux = u[0].clamp(-self.accel_max, self.accel_max);
        let uy = u[1].clamp(-self.accel_max, self.accel_max);
        let vx = x[2] + self.dt * a * ux;
        let vy = x[3] + self.dt * a * uy;
        let mut next = DVector::from_vec(vec![x[0] + self.dt * vx, x[1] + self.dt * vy, vx, vy]);
        let seed = SeedSpec::new(master_seed, NOISE_STREAM_BASE.wrapping_add(step as u64));
        let mut rng = seed.rng_for(0);
        for i in 0..4 {
            let z: f64 = rng.sample(StandardNormal);
            next[i] += self.process_noise_std[i] * z;
        }
        next
    }

    fn dist_to_goal(&self, x: &DVector<f64>) -> f64 {
        let (dx, dy) = (x[0] - self.goal[0], x[1] - self.goal[1]);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Stage/terminal cost coefficients for the point-mass task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    /// Squared goal distance, per step.
    pub pos: f64,
    /// Squared speed, per step.
    pub vel: f64,
    /// Squared input, per step.
    pub input: f64,
    /// Squared goal distance at the horizon.
    pub terminal_pos: f64,
    /// Squared speed at the horizon.
    pub terminal_vel: f64,
    /// Flat charge per step spent inside an obstacle.
    pub obstacle_penalty: f64,
    /// Flat charge per step spent outside the workspace.
    pub bounds_penalty: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            pos: 0.5,
            vel: 0.05,
            input: 0.05,
            terminal_pos: 10.0,
            terminal_vel: 1.0,
            obstacle_penalty: 1e6,
            bounds_penalty: 1e6,
        }
    }
}

/// The planner's declarative model of the task: prediction horizon plus cost
/// weights. [`PlannerModel::build_problem`] turns it into executable
/// closures; keeping the declarative form around is what makes run logs
/// replayable.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerModel {
    pub horizon: usize,
    pub weights: CostWeights,
}

impl Default for PlannerModel {
    fn default() -> Self {
        PlannerModel { horizon: crate::solver::DEFAULT_HORIZON, weights: CostWeights::default() }
    }
}

impl PlannerModel {
    /// Builds the planning problem for `env`. The planner's dynamics are the
    /// nominal plant (no mismatch scale, no noise); penalties are assessed on
    /// the pre-transition state of each step.
    pub fn build_problem(&self, env: &Environment) -> Result<Problem> {
        env.validate()?;
        let dt = env.dt;
        let goal = env.goal;
        let w = self.weights;
        let obstacles = env.obstacles.clone();
        let bounds = env.bounds;
        let stage = move |x: &DVector<f64>, u: &DVector<f64>, _t: usize| {
            let (dx, dy) = (x[0] - goal[0], x[1] - goal[1]);
            let mut c = w.pos * (dx * dx + dy * dy)
                + w.vel * (x[2] * x[2] + x[3] * x[3])
                + w.input * (u[0] * u[0] + u[1] * u[1]);
            if obstacles.iter().any(|o| o.contains(x[0], x[1])) {
                c += w.obstacle_penalty;
            }
            if !bounds.contains(x[0], x[1]) {
                c += w.bounds_penalty;
            }
            c
        };
        let terminal = move |x: &DVector<f64>| {
            let (dx, dy) = (x[0] - goal[0], x[1] - goal[1]);
            w.terminal_pos * (dx * dx + dy * dy) + w.terminal_vel * (x[2] * x[2] + x[3] * x[3])
        };
        let dynamics = move |x: &DVector<f64>, u: &DVector<f64>| {
            let vx = x[2] + dt * u[0];
            let vy = x[3] + dt * u[1];
            DVector::from_vec(vec![x[0] + dt * vx, x[1] + dt * vy, vx, vy])
        };
        Problem::new(
            self.horizon,
            4,
            2,
            Box::new(dynamics),
            Box::new(stage),
            Box::new(terminal),
        )?
        .with_input_bounds(
            DVector::from_element(2, -env.accel_max),
            DVector::from_element(2, env.accel_max),
        )
    }
}

/// How a closed-loop run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    ReachedGoal,
    Collided,
    Timeout,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::ReachedGoal => "reached_goal",
            Outcome::Collided => "collided",
            Outcome::Timeout => "timeout",
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reached_goal" => Ok(Outcome::ReachedGoal),
            "collided" => Ok(Outcome::Collided),
            "timeout" => Ok(Outcome::Timeout),
            other => Err(Error::InvalidArgument(format!("unknown outcome '{other}'"))),
        }
    }
}

/// One executed control step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// State the input was applied in.
    pub state: [f64; 4],
    /// Applied input (first step of the planned sequence).
    pub input: [f64; 2],
    /// Stage cost realized at `(state, input)`.
    pub stage_cost: f64,
    /// Full planned sequence; kept so planned-trajectory analyses can run
    /// without re-planning.
    pub solution: ControlSequence,
    pub solution_cost: f64,
    pub ess: f64,
    pub min_cost: f64,
    pub mean_cost: f64,
    /// Whether the step ended inside an obstacle (terminating the run).
    pub collision: bool,
    /// Goal distance after the step.
    pub dist_to_goal: f64,
}

/// A complete closed-loop run: configuration snapshot, per-step records, and
/// the realized outcome. Two runs with equal configuration are equal.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub env: Environment,
    pub model: PlannerModel,
    pub solver: SolverConfig,
    pub planner: Planner,
    pub records: Vec<StepRecord>,
    pub final_state: [f64; 4],
    pub outcome: Outcome,
    /// Sum of realized stage costs plus the terminal cost at the final state.
    pub total_cost: f64,
}

impl RunLog {
    pub fn steps(&self) -> usize {
        self.records.len()
    }

    /// Per-step trace as CSV (`step,px,py,vx,vy,ux,uy,cost,ess`), floats with
    /// 17 significant digits, LF line endings.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("step,px,py,vx,vy,ux,uy,cost,ess\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.step,
                sig17(r.state[0]),
                sig17(r.state[1]),
                sig17(r.state[2]),
                sig17(r.state[3]),
                sig17(r.input[0]),
                sig17(r.input[1]),
                sig17(r.stage_cost),
                sig17(r.ess),
            ));
        }
        out
    }

    /// Human-readable flat key/value summary: outcome, totals, and the full
    /// configuration needed to replay the run.
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# closed-loop run\n");
        s.push_str(&format!("outcome = {}\n", self.outcome.as_str()));
        s.push_str(&format!("steps = {}\n", self.steps()));
        s.push_str(&format!("total_cost = {}\n", sig17(self.total_cost)));
        s.push_str(&format!(
            "final_state = {},{},{},{}\n",
            sig17(self.final_state[0]),
            sig17(self.final_state[1]),
            sig17(self.final_state[2]),
            sig17(self.final_state[3])
        ));
        s.push_str(&format!("planner = {}\n", self.planner.as_str()));
        s.push_str(&format!("solver.samples = {}\n", self.solver.samples));
        s.push_str(&format!("solver.lambda = {}\n", self.solver.lambda));
        let std: Vec<String> = self.solver.std.iter().map(|v| v.to_string()).collect();
        s.push_str(&format!("solver.std = {}\n", std.join(",")));
        s.push_str(&format!("solver.warm_start_fill = {}\n", self.solver.warm_start_fill.as_str()));
        s.push_str(&format!("solver.master_seed = {}\n", self.solver.seed.master_seed));
        s.push_str(&format!("solver.stream_id = {}\n", self.solver.seed.stream_id));
        s.push_str(&format!("model.horizon = {}\n", self.model.horizon));
        let w = self.model.weights;
        s.push_str(&format!("model.pos_weight = {}\n", w.pos));
        s.push_str(&format!("model.vel_weight = {}\n", w.vel));
        s.push_str(&format!("model.input_weight = {}\n", w.input));
        s.push_str(&format!("model.terminal_pos_weight = {}\n", w.terminal_pos));
        s.push_str(&format!("model.terminal_vel_weight = {}\n", w.terminal_vel));
        s.push_str(&format!("model.obstacle_penalty = {}\n", w.obstacle_penalty));
        s.push_str(&format!("model.bounds_penalty = {}\n", w.bounds_penalty));
        let e = &self.env;
        s.push_str(&format!("env.dt = {}\n", e.dt));
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        s.push_str(&format!("env.start = {}\n", join(&e.start)));
        s.push_str(&format!("env.goal = {}\n", join(&e.goal)));
        s.push_str(&format!("env.goal_radius = {}\n", e.goal_radius));
        let obstacles: Vec<String> =
            e.obstacles.iter().map(|o| format!("{},{},{}", o.x, o.y, o.radius)).collect();
        s.push_str(&format!("env.obstacles = {}\n", obstacles.join(";")));
        s.push_str(&format!(
            "env.bounds = {},{},{},{}\n",
            e.bounds.x_min, e.bounds.x_max, e.bounds.y_min, e.bounds.y_max
        ));
        s.push_str(&format!("env.max_steps = {}\n", e.max_steps));
        s.push_str(&format!("env.accel_max = {}\n", e.accel_max));
        s.push_str(&format!("env.process_noise_std = {}\n", join(&e.process_noise_std)));
        s.push_str(&format!("env.plant_accel_scale = {}\n", e.plant_accel_scale));
        s
    }
}

/// A run that aborted mid-flight: the underlying error plus everything that
/// was logged before it. The partial log reports `timeout` as a placeholder
/// outcome.
#[derive(Debug)]
pub struct RunError {
    pub error: Error,
    pub partial: Box<RunLog>,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted after {} steps: {}", self.partial.steps(), self.error)
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn state_array(x: &DVector<f64>) -> [f64; 4] {
    [x[0], x[1], x[2], x[3]]
}

/// Runs the receding-horizon loop in `env` until the goal is reached, an
/// obstacle is hit, or `max_steps` elapse.
///
/// Per step `t` the planner uses stream `base + t` of the configured seed
/// (the plant noise lives in a disjoint stream range), plans from the current
/// state with the shifted previous solution as prior mean (zeros on the first
/// step), applies the first input, and advances the plant. The returned log
/// replays bit for bit from its recorded configuration, independent of the
/// number of worker threads.
pub fn mpc_run(
    env: &Environment,
    planner: Planner,
    solver: &SolverConfig,
    model: &PlannerModel,
) -> std::result::Result<RunLog, RunError> {
    let empty_log = |outcome: Outcome| RunLog {
        env: env.clone(),
        model: model.clone(),
        solver: solver.clone(),
        planner,
        records: Vec::new(),
        final_state: env.start,
        outcome,
        total_cost: 0.0,
    };
    let problem = match model.build_problem(env) {
        Ok(p) => p,
        Err(error) => {
            return Err(RunError { error, partial: Box::new(empty_log(Outcome::Timeout)) })
        }
    };
    let mut x = DVector::from_row_slice(&env.start);
    let mut prior = ControlSequence::zeros(model.horizon, 2);
    let mut records: Vec<StepRecord> = Vec::new();
    let mut total_cost = 0.0;
    let mut outcome = None;
    for step in 0..env.max_steps {
        if env.dist_to_goal(&x) <= env.goal_radius {
            outcome = Some(Outcome::ReachedGoal);
            break;
        }
        let step_cfg = SolverConfig {
            seed: solver.seed.with_stream(solver.seed.stream_id.wrapping_add(step as u64)),
            ..solver.clone()
        };
        let report = match plan_step(&problem, &x, &prior, &step_cfg, planner) {
            Ok(r) => r,
            Err(error) => {
                let mut log = empty_log(Outcome::Timeout);
                log.records = records;
                log.final_state = state_array(&x);
                log.total_cost = total_cost;
                return Err(RunError { error, partial: Box::new(log) });
            }
        };
        let u = report.solution.step(0);
        let stage_cost = problem.stage_cost(&x, &u, step);
        total_cost += stage_cost;
        let next = env.plant_step(&x, &u, solver.seed.master_seed, step);
        let collision = env.obstacles.iter().any(|o| o.contains(next[0], next[1]));
        records.push(StepRecord {
            step,
            state: state_array(&x),
            input: [u[0], u[1]],
            stage_cost,
            solution_cost: report.solution_cost,
            ess: report.ess,
            min_cost: report.min_cost,
            mean_cost: report.mean_cost,
            solution: report.solution.clone(),
            collision,
            dist_to_goal: env.dist_to_goal(&next),
        });
        prior = shift_warm_start(&report.solution, solver.warm_start_fill);
        x = next;
        if collision {
            outcome = Some(Outcome::Collided);
            break;
        }
    }
    let outcome = outcome.unwrap_or(if env.dist_to_goal(&x) <= env.goal_radius {
        Outcome::ReachedGoal
    } else {
        Outcome::Timeout
    });
    total_cost += problem.terminal_cost(&x);
    Ok(RunLog {
        env: env.clone(),
        model: model.clone(),
        solver: solver.clone(),
        planner,
        records,
        final_state: state_array(&x),
        outcome,
        total_cost,
    })
}

/// Which side of an obstacle a trajectory passed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossSide {
    Left,
    Right,
}

impl CrossSide {
    pub fn as_str(self) -> &'static str {
        match self {
            CrossSide::Left => "left",
            CrossSide::Right => "right",
        }
    }
}

fn crossing_lateral(states: &[[f64; 2]], obstacle: &Obstacle) -> Option<f64> {
    for pair in states.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a[0] < obstacle.x && obstacle.x <= b[0] {
            let f = (obstacle.x - a[0]) / (b[0] - a[0]).max(1e-12);
            return Some(a[1] + f * (b[1] - a[1]) - obstacle.y);
        }
    }
    None
}

/// The side on which the *realized* trajectory first crossed the obstacle's
/// x-line, by linear interpolation between the straddling states. `None` if
/// the run never crossed it.
pub fn crossing_side(log: &RunLog, obstacle: &Obstacle) -> Option<CrossSide> {
    let mut positions: Vec<[f64; 2]> =
        log.records.iter().map(|r| [r.state[0], r.state[1]]).collect();
    positions.push([log.final_state[0], log.final_state[1]]);
    crossing_lateral(&positions, obstacle)
        .map(|lat| if lat > 0.0 { CrossSide::Left } else { CrossSide::Right })
}

/// The first step whose *planned* trajectory clears the obstacle's x-line
/// with a lateral margin above half the obstacle radius — the moment the
/// planner stopped hedging between the two ways around. `None` if no plan
/// ever committed.
pub fn planned_commit_step(log: &RunLog, obstacle: &Obstacle) -> Result<Option<usize>> {
    let problem = log.model.build_problem(&log.env)?;
    for record in &log.records {
        let x0 = DVector::from_row_slice(&record.state);
        let traj = problem.rollout(&x0, &record.solution)?;
        let positions: Vec<[f64; 2]> =
            (0..traj.states.nrows()).map(|t| [traj.states[(t, 0)], traj.states[(t, 1)]]).collect();
        if let Some(lat) = crossing_lateral(&positions, obstacle) {
            if lat.abs() > obstacle.radius / 2.0 {
                return Ok(Some(record.step));
            }
        }
    }
    Ok(None)
}

/// One run of the symmetry scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryRun {
    pub master_seed: u64,
    pub outcome: Outcome,
    pub total_cost: f64,
    pub side: Option<CrossSide>,
    pub commit_step: Option<usize>,
}

/// Aggregate passage statistics over a batch of seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryStats {
    pub runs: Vec<SymmetryRun>,
    /// Runs that crossed the obstacle line.
    pub crossed: usize,
    /// Fraction of crossing runs that passed on the left (NaN if none crossed).
    pub left_fraction: f64,
    /// Commit steps of the runs that committed, in seed order.
    pub commit_steps: Vec<usize>,
}

/// Runs `seeds` independent closed-loop runs (master seed = base + i) and
/// reports which side of `env.obstacles[0]` each run passed on and when its
/// plan committed to that side. Runs execute in parallel; results are in seed
/// order and independent of thread count.
pub fn symmetry_scenario_stats(
    env: &Environment,
    planner: Planner,
    solver: &SolverConfig,
    model: &PlannerModel,
    seeds: usize,
) -> Result<SymmetryStats> {
    if seeds == 0 {
        return Err(Error::InvalidArgument("symmetry scenario needs at least 1 seed".into()));
    }
    let obstacle = *env
        .obstacles
        .first()
        .ok_or_else(|| Error::InvalidArgument("symmetry scenario needs an obstacle".into()))?;
    let runs: Result<Vec<SymmetryRun>> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let master = solver.seed.master_seed.wrapping_add(i as u64);
            let cfg = SolverConfig { seed: SeedSpec::new(master, solver.seed.stream_id), ..solver.clone() };
            let log = mpc_run(env, planner, &cfg, model).map_err(|e| {
                Error::SolverFailure(format!("seed {master}: {e}"))
            })?;
            Ok(SymmetryRun {
                master_seed: master,
                outcome: log.outcome,
                total_cost: log.total_cost,
                side: crossing_side(&log, &obstacle),
                commit_step: planned_commit_step(&log, &obstacle)?,
            })
        })
        .collect();
    let runs = runs?;
    let crossed = runs.iter().filter(|r| r.side.is_some()).count();
    let left = runs.iter().filter(|r| r.side == Some(CrossSide::Left)).count();
    let left_fraction = if crossed > 0 { left as f64 / crossed as f64 } else { f64::NAN };
    let commit_steps = runs.iter().filter_map(|r| r.commit_step).collect();
    Ok(SymmetryStats { runs, crossed, left_fraction, commit_steps })
}
