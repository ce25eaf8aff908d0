//! Experiment configuration: a flat `key = value` file format with one
//! canonical key set, environment-variable overrides, and lossless
//! round-tripping.
//!
//! Precedence, lowest to highest: built-in defaults, configuration file,
//! `SMPC_*` environment variables, command-line flags. An environment
//! variable's name is the config key upper-cased with dots replaced by
//! underscores (`solver.lambda` -> `SMPC_SOLVER_LAMBDA`).

use smpc_core::sampling::WarmStartFill;
use smpc_core::sim::{CostWeights, Environment, Obstacle, PlannerModel, WorkspaceBounds};
use smpc_core::solver::{Planner, DEFAULT_HORIZON, DEFAULT_LAMBDA, DEFAULT_SAMPLES};

/// Shape of the scalar cost used by the static 1D experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// `amplitude * u^2 * sin(2*pi*cycles*u)` — oscillatory with wells that
    /// deepen away from the origin.
    Oscillatory,
    /// `constant`, independent of `u`.
    Constant,
    /// `amplitude * (u - center)^2`.
    Quadratic,
}

impl CostKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CostKind::Oscillatory => "oscillatory",
            CostKind::Constant => "constant",
            CostKind::Quadratic => "quadratic",
        }
    }
}

impl std::str::FromStr for CostKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oscillatory" => Ok(CostKind::Oscillatory),
            "constant" => Ok(CostKind::Constant),
            "quadratic" => Ok(CostKind::Quadratic),
            other => Err(format!(
                "unknown cost kind '{other}' (expected oscillatory, constant, or quadratic)"
            )),
        }
    }
}

/// Every tunable of every experiment, as plain data. Fields map one-to-one
/// onto the canonical dotted keys in [`ExperimentConfig::KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: String,
    pub threads: usize,
    pub solver_planner: Planner,
    pub solver_samples: usize,
    pub solver_lambda: f64,
    pub solver_std: Vec<f64>,
    pub solver_warm_start_fill: WarmStartFill,
    pub cost_kind: CostKind,
    pub cost_amplitude: f64,
    pub cost_cycles: f64,
    pub cost_constant: f64,
    pub cost_center: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_points: usize,
    pub prior_mean: f64,
    pub prior_std: f64,
    pub posterior_lambdas: Vec<f64>,
    pub posterior_mode_threshold: f64,
    pub sweep_lambdas: Vec<f64>,
    pub sweep_samples: Vec<usize>,
    pub sweep_prior_means: Vec<f64>,
    pub sweep_prior_stds: Vec<f64>,
    pub compare_samples: Vec<usize>,
    pub compare_seeds: usize,
    pub symmetry_seeds: usize,
    pub symmetry_offset_radii: f64,
    pub model_horizon: usize,
    pub model_pos_weight: f64,
    pub model_vel_weight: f64,
    pub model_input_weight: f64,
    pub model_terminal_pos_weight: f64,
    pub model_terminal_vel_weight: f64,
    pub model_obstacle_penalty: f64,
    pub model_bounds_penalty: f64,
    pub env_dt: f64,
    pub env_start: [f64; 4],
    pub env_goal: [f64; 2],
    pub env_goal_radius: f64,
    pub env_obstacles: Vec<Obstacle>,
    pub env_bounds: [f64; 4],
    pub env_max_steps: usize,
    pub env_accel_max: f64,
    pub env_process_noise_std: [f64; 4],
    pub env_plant_accel_scale: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let env = Environment::benchmark();
        let weights = CostWeights::default();
        ExperimentConfig {
            seed: 0,
            out: "out".into(),
            threads: 0,
            solver_planner: Planner::Mppi,
            solver_samples: DEFAULT_SAMPLES,
            solver_lambda: DEFAULT_LAMBDA,
            solver_std: vec![1.0],
            solver_warm_start_fill: WarmStartFill::RepeatLast,
            cost_kind: CostKind::Oscillatory,
            cost_amplitude: 0.6,
            cost_cycles: 2.5,
            cost_constant: 0.0,
            cost_center: 0.0,
            grid_lo: -6.0,
            grid_hi: 6.0,
            grid_points: 4801,
            prior_mean: 0.0,
            prior_std: 1.0,
            posterior_lambdas: vec![0.05, 0.5, 5.0],
            posterior_mode_threshold: smpc_core::posterior::MODE_REL_THRESHOLD,
            sweep_lambdas: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            sweep_samples: vec![16, 64, 256, 1024],
            sweep_prior_means: vec![-3.0, 0.0],
            sweep_prior_stds: vec![0.25, 1.0],
            compare_samples: vec![16, 64, 256],
            compare_seeds: 30,
            symmetry_seeds: 200,
            symmetry_offset_radii: 0.0,
            model_horizon: DEFAULT_HORIZON,
            model_pos_weight: weights.pos,
            model_vel_weight: weights.vel,
            model_input_weight: weights.input,
            model_terminal_pos_weight: weights.terminal_pos,
            model_terminal_vel_weight: weights.terminal_vel,
            model_obstacle_penalty: weights.obstacle_penalty,
            model_bounds_penalty: weights.bounds_penalty,
            env_dt: env.dt,
            env_start: env.start,
            env_goal: env.goal,
            env_goal_radius: env.goal_radius,
            env_obstacles: env.obstacles,
            env_bounds: [env.bounds.x_min, env.bounds.x_max, env.bounds.y_min, env.bounds.y_max],
            env_max_steps: env.max_steps,
            env_accel_max: env.accel_max,
            env_process_noise_std: env.process_noise_std,
            env_plant_accel_scale: env.plant_accel_scale,
        }
    }
}

fn join_floats(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_f64(key: &str, value: &str) -> Result<f64, String> {
    value.trim().parse().map_err(|_| format!("{key}: '{value}' is not a number"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, String> {
    value.trim().parse().map_err(|_| format!("{key}: '{value}' is not a non-negative integer"))
}

fn parse_u64(key: &str, value: &str) -> Result<u64, String> {
    value.trim().parse().map_err(|_| format!("{key}: '{value}' is not a non-negative integer"))
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    let items: Vec<&str> =
        value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(format!("{key}: expected a comma-separated list of numbers"));
    }
    items.iter().map(|s| parse_f64(key, s)).collect()
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>, String> {
    let items: Vec<&str> =
        value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(format!("{key}: expected a comma-separated list of integers"));
    }
    items.iter().map(|s| parse_usize(key, s)).collect()
}

fn parse_f64_array<const N: usize>(key: &str, value: &str) -> Result<[f64; N], String> {
    let list = parse_f64_list(key, value)?;
    if list.len() != N {
        return Err(format!("{key}: expected {N} comma-separated numbers, got {}", list.len()));
    }
    let mut out = [0.0; N];
    out.copy_from_slice(&list);
    Ok(out)
}

fn parse_obstacles(key: &str, value: &str) -> Result<Vec<Obstacle>, String> {
    let trimmed = value.trim();
    if trimmed.is_empty() || trimmed == "none" {
        return Ok(Vec::new());
    }
    trimmed
        .split(';')
        .map(|triple| {
            let [x, y, radius] = parse_f64_array::<3>(key, triple)?;
            Ok(Obstacle { x, y, radius })
        })
        .collect()
}

fn format_obstacles(obstacles: &[Obstacle]) -> String {
    if obstacles.is_empty() {
        return "none".into();
    }
    obstacles
        .iter()
        .map(|o| format!("{},{},{}", o.x, o.y, o.radius))
        .collect::<Vec<_>>()
        .join(";")
}

impl ExperimentConfig {
    /// Canonical key order; also the serialization order.
    pub const KEYS: &'static [&'static str] = &[
        "seed",
        "out",
        "threads",
        "solver.planner",
        "solver.samples",
        "solver.lambda",
        "solver.std",
        "solver.warm_start_fill",
        "cost.kind",
        "cost.amplitude",
        "cost.cycles",
        "cost.constant",
        "cost.center",
        "grid.lo",
        "grid.hi",
        "grid.points",
        "prior.mean",
        "prior.std",
        "posterior.lambdas",
        "posterior.mode_threshold",
        "sweep.lambdas",
        "sweep.samples",
        "sweep.prior_means",
        "sweep.prior_stds",
        "compare.samples",
        "compare.seeds",
        "symmetry.seeds",
        "symmetry.offset_radii",
        "model.horizon",
        "model.pos_weight",
        "model.vel_weight",
        "model.input_weight",
        "model.terminal_pos_weight",
        "model.terminal_vel_weight",
        "model.obstacle_penalty",
        "model.bounds_penalty",
        "env.dt",
        "env.start",
        "env.goal",
        "env.goal_radius",
        "env.obstacles",
        "env.bounds",
        "env.max_steps",
        "env.accel_max",
        "env.process_noise_std",
        "env.plant_accel_scale",
    ];

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse_u64(key, v)?,
            "out" => self.out = v.to_string(),
            "threads" => self.threads = parse_usize(key, v)?,
            "solver.planner" => self.solver_planner = v.parse().map_err(|e| format!("{e}"))?,
            "solver.samples" => self.solver_samples = parse_usize(key, v)?,
            "solver.lambda" => self.solver_lambda = parse_f64(key, v)?,
            "solver.std" => self.solver_std = parse_f64_list(key, v)?,
            "solver.warm_start_fill" => {
                self.solver_warm_start_fill = v.parse().map_err(|e| format!("{e}"))?
            }
            "cost.kind" => self.cost_kind = v.parse()?,
            "cost.amplitude" => self.cost_amplitude = parse_f64(key, v)?,
            "cost.cycles" => self.cost_cycles = parse_f64(key, v)?,
            "cost.constant" => self.cost_constant = parse_f64(key, v)?,
            "cost.center" => self.cost_center = parse_f64(key, v)?,
            "grid.lo" => self.grid_lo = parse_f64(key, v)?,
            "grid.hi" => self.grid_hi = parse_f64(key, v)?,
            "grid.points" => self.grid_points = parse_usize(key, v)?,
            "prior.mean" => self.prior_mean = parse_f64(key, v)?,
            "prior.std" => self.prior_std = parse_f64(key, v)?,
            "posterior.lambdas" => self.posterior_lambdas = parse_f64_list(key, v)?,
            "posterior.mode_threshold" => self.posterior_mode_threshold = parse_f64(key, v)?,
            "sweep.lambdas" => self.sweep_lambdas = parse_f64_list(key, v)?,
            "sweep.samples" => self.sweep_samples = parse_usize_list(key, v)?,
            "sweep.prior_means" => self.sweep_prior_means = parse_f64_list(key, v)?,
            "sweep.prior_stds" => self.sweep_prior_stds = parse_f64_list(key, v)?,
            "compare.samples" => self.compare_samples = parse_usize_list(key, v)?,
            "compare.seeds" => self.compare_seeds = parse_usize(key, v)?,
            "symmetry.seeds" => self.symmetry_seeds = parse_usize(key, v)?,
            "symmetry.offset_radii" => self.symmetry_offset_radii = parse_f64(key, v)?,
            "model.horizon" => self.model_horizon = parse_usize(key, v)?,
            "model.pos_weight" => self.model_pos_weight = parse_f64(key, v)?,
            "model.vel_weight" => self.model_vel_weight = parse_f64(key, v)?,
            "model.input_weight" => self.model_input_weight = parse_f64(key, v)?,
            "model.terminal_pos_weight" => self.model_terminal_pos_weight = parse_f64(key, v)?,
            "model.terminal_vel_weight" => self.model_terminal_vel_weight = parse_f64(key, v)?,
            "model.obstacle_penalty" => self.model_obstacle_penalty = parse_f64(key, v)?,
            "model.bounds_penalty" => self.model_bounds_penalty = parse_f64(key, v)?,
            "env.dt" => self.env_dt = parse_f64(key, v)?,
            "env.start" => self.env_start = parse_f64_array(key, v)?,
            "env.goal" => self.env_goal = parse_f64_array(key, v)?,
            "env.goal_radius" => self.env_goal_radius = parse_f64(key, v)?,
            "env.obstacles" => self.env_obstacles = parse_obstacles(key, v)?,
            "env.bounds" => self.env_bounds = parse_f64_array(key, v)?,
            "env.max_steps" => self.env_max_steps = parse_usize(key, v)?,
            "env.accel_max" => self.env_accel_max = parse_f64(key, v)?,
            "env.process_noise_std" => self.env_process_noise_std = parse_f64_array(key, v)?,
            "env.plant_accel_scale" => self.env_plant_accel_scale = parse_f64(key, v)?,
            other => return Err(format!("unknown configuration key '{other}'")),
        }
        Ok(())
    }

    /// The textual value of one key, as it would be serialized.
    pub fn get(&self, key: &str) -> String {
        match key {
            "seed" => self.seed.to_string(),
            "out" => self.out.clone(),
            "threads" => self.threads.to_string(),
            "solver.planner" => self.solver_planner.as_str().into(),
            "solver.samples" => self.solver_samples.to_string(),
            "solver.lambda" => self.solver_lambda.to_string(),
            "solver.std" => join_floats(&self.solver_std),
            "solver.warm_start_fill" => self.solver_warm_start_fill.as_str().into(),
            "cost.kind" => self.cost_kind.as_str().into(),
            "cost.amplitude" => self.cost_amplitude.to_string(),
            "cost.cycles" => self.cost_cycles.to_string(),
            "cost.constant" => self.cost_constant.to_string(),
            "cost.center" => self.cost_center.to_string(),
            "grid.lo" => self.grid_lo.to_string(),
            "grid.hi" => self.grid_hi.to_string(),
            "grid.points" => self.grid_points.to_string(),
            "prior.mean" => self.prior_mean.to_string(),
            "prior.std" => self.prior_std.to_string(),
            "posterior.lambdas" => join_floats(&self.posterior_lambdas),
            "posterior.mode_threshold" => self.posterior_mode_threshold.to_string(),
            "sweep.lambdas" => join_floats(&self.sweep_lambdas),
            "sweep.samples" => {
                self.sweep_samples.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            }
            "sweep.prior_means" => join_floats(&self.sweep_prior_means),
            "sweep.prior_stds" => join_floats(&self.sweep_prior_stds),
            "compare.samples" => {
                self.compare_samples.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            }
            "compare.seeds" => self.compare_seeds.to_string(),
            "symmetry.seeds" => self.symmetry_seeds.to_string(),
            "symmetry.offset_radii" => self.symmetry_offset_radii.to_string(),
            "model.horizon" => self.model_horizon.to_string(),
            "model.pos_weight" => self.model_pos_weight.to_string(),
            "model.vel_weight" => self.model_vel_weight.to_string(),
            "model.input_weight" => self.model_input_weight.to_string(),
            "model.terminal_pos_weight" => self.model_terminal_pos_weight.to_string(),
            "model.terminal_vel_weight" => self.model_terminal_vel_weight.to_string(),
            "model.obstacle_penalty" => self.model_obstacle_penalty.to_string(),
            "model.bounds_penalty" => self.model_bounds_penalty.to_string(),
            "env.dt" => self.env_dt.to_string(),
            "env.start" => join_floats(&self.env_start),
            "env.goal" => join_floats(&self.env_goal),
            "env.goal_radius" => self.env_goal_radius.to_string(),
            "env.obstacles" => format_obstacles(&self.env_obstacles),
            "env.bounds" => join_floats(&self.env_bounds),
            "env.max_steps" => self.env_max_steps.to_string(),
            "env.accel_max" => self.env_accel_max.to_string(),
            "env.process_noise_std" => join_floats(&self.env_process_noise_std),
            "env.plant_accel_scale" => self.env_plant_accel_scale.to_string(),
            other => panic!("unknown configuration key '{other}'"),
        }
    }

    /// Parses a configuration file body: one `key = value` per line, `#`
    /// comments and blank lines ignored, later duplicates winning. Values
    /// accumulate on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (number, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected 'key = value'", number + 1))?;
            self.set(key.trim(), value)
                .map_err(|e| format!("line {}: {e}", number + 1))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Serializes every key in canonical order. `parse(serialize(c)) == c`
    /// for any valid configuration.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            out.push_str(&format!("{key} = {}\n", self.get(key)));
        }
        out
    }

    /// The environment variable that overrides `key`.
    pub fn env_var_name(key: &str) -> String {
        format!("SMPC_{}", key.to_uppercase().replace('.', "_"))
    }

    /// Applies overrides from `lookup`, which maps an environment-variable
    /// name to its value (the process environment in production, a plain
    /// table in tests).
    pub fn apply_overrides_from(
        &mut self,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<(), String> {
        for key in Self::KEYS {
            let var = Self::env_var_name(key);
            if let Some(value) = lookup(&var) {
                self.set(key, &value).map_err(|e| format!("{var}: {e}"))?;
            }
        }
        Ok(())
    }

    /// Applies `SMPC_*` environment-variable overrides for every known key.
    pub fn apply_env_overrides(&mut self) -> Result<(), String> {
        self.apply_overrides_from(|var| std::env::var(var).ok())
    }

    /// The simulation environment described by the `env.*` keys.
    pub fn environment(&self) -> Environment {
        Environment {
            dt: self.env_dt,
            start: self.env_start,
            goal: self.env_goal,
            goal_radius: self.env_goal_radius,
            obstacles: self.env_obstacles.clone(),
            bounds: WorkspaceBounds {
                x_min: self.env_bounds[0],
                x_max: self.env_bounds[1],
                y_min: self.env_bounds[2],
                y_max: self.env_bounds[3],
            },
            max_steps: self.env_max_steps,
            accel_max: self.env_accel_max,
            process_noise_std: self.env_process_noise_std,
            plant_accel_scale: self.env_plant_accel_scale,
        }
    }

    /// The planner model described by the `model.*` keys.
    pub fn planner_model(&self) -> PlannerModel {
        PlannerModel {
            horizon: self.model_horizon,
            weights: CostWeights {
                pos: self.model_pos_weight,
                vel: self.model_vel_weight,
                input: self.model_input_weight,
                terminal_pos: self.model_terminal_pos_weight,
                terminal_vel: self.model_terminal_vel_weight,
                obstacle_penalty: self.model_obstacle_penalty,
                bounds_penalty: self.model_bounds_penalty,
            },
        }
    }

    /// The static scalar cost described by the `cost.*` keys.
    pub fn cost_fn(&self) -> impl Fn(f64) -> f64 + Send + Sync + Copy + 'static {
        let kind = self.cost_kind;
        let amplitude = self.cost_amplitude;
        let cycles = self.cost_cycles;
        let constant = self.cost_constant;
        let center = self.cost_center;
        move |u: f64| match kind {
            CostKind::Oscillatory => {
                amplitude * u * u * (2.0 * std::f64::consts::PI * cycles * u).sin()
            }
            CostKind::Constant => constant,
            CostKind::Quadratic => amplitude * (u - center) * (u - center),
        }
    }
}
