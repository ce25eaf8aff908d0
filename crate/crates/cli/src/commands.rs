//! Experiment drivers behind the CLI verbs.
//!
//! Every verb is an ordinary function from a parsed [`ExperimentConfig`] to a
//! set of files, so the test suites can drive the full pipeline in-process.
//! All CSV output has a header row, a fixed column order, 17-significant-digit
//! floats, and LF line endings; nothing timing-dependent is ever written, so
//! outputs are byte-reproducible for a given configuration.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use smpc_core::nalgebra::{DMatrix, DVector};
use smpc_core::numfmt::sig17;
use smpc_core::posterior::{
    count_modes, expected_value, grid_posterior, normal_pdf, posterior_moments, Grid1D,
    GridDensity,
};
use smpc_core::sampling::SeedSpec;
use smpc_core::sim::{mpc_run, symmetry_scenario_stats, CrossSide, Outcome, RunLog};
use smpc_core::solver::{mppi_step, plan_step, Planner, SolveReport, SolverConfig};
use smpc_core::{ControlSequence, Problem};

use crate::config::ExperimentConfig;

/// What went wrong, split by whose fault it is: bad inputs exit with code 2,
/// failures during a well-configured run exit with code 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<smpc_core::Error> for CliError {
    fn from(e: smpc_core::Error) -> Self {
        use smpc_core::Error;
        match &e {
            Error::InvalidArgument(_) | Error::ShapeMismatch(_) => CliError::Config(e.to_string()),
            Error::NarrowGrid(_) => {
                CliError::Config(format!("{e}; widen the grid or move it over the prior"))
            }
            Error::DegenerateDensity(_) => CliError::Config(format!(
                "{e}; raise the temperature, widen the grid, or move the prior toward the \
                 low-cost region"
            )),
            Error::NonFinite { .. } | Error::SolverFailure(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// The eight experiment verbs exposed by the binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Posterior,
    Solve,
    Simulate,
    Compare,
    SweepLambda,
    SweepSamples,
    SweepPrior,
    Symmetry,
}

/// Runs one verb and returns the files it wrote, in creation order.
///
/// `threads = 0` keeps the process-global thread pool; any other value runs
/// the whole command inside a dedicated pool of that size, which is what
/// makes thread-count experiments possible within one process.
pub fn run(verb: Verb, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let out_dir = PathBuf::from(&cfg.out);
    std::fs::create_dir_all(&out_dir)?;
    let exec = || dispatch(verb, cfg, &out_dir);
    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
        pool.install(exec)
    } else {
        exec()
    }
}

fn dispatch(verb: Verb, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    match verb {
        Verb::Posterior => cmd_posterior(cfg, dir),
        Verb::Solve => cmd_solve(cfg, dir),
        Verb::Simulate => cmd_simulate(cfg, dir),
        Verb::Compare => cmd_compare(cfg, dir),
        Verb::SweepLambda => cmd_sweep_lambda(cfg, dir),
        Verb::SweepSamples => cmd_sweep_samples(cfg, dir),
        Verb::SweepPrior => cmd_sweep_prior(cfg, dir),
        Verb::Symmetry => cmd_symmetry(cfg, dir),
    }
}

fn write_text(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn grid1d(cfg: &ExperimentConfig) -> Result<Grid1D, CliError> {
    Ok(Grid1D::new(cfg.grid_lo, cfg.grid_hi, cfg.grid_points)?)
}

/// Keeps free-text error messages inside a single CSV cell.
fn sanitize(text: &str) -> String {
    text.replace(['\n', '\r'], " ").replace(',', ";")
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One density table: grid point, prior pdf, the cost-likelihood factor
/// (scaled so its maximum over the grid is 1), and the normalized posterior.
fn density_csv(
    density: &GridDensity,
    cost: impl Fn(f64) -> f64,
    prior_mean: f64,
    prior_std: f64,
    lambda: f64,
) -> String {
    let points = density.grid.points();
    let costs: Vec<f64> = points.iter().map(|&u| cost(u)).collect();
    let min_cost = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = String::from("u,prior_pdf,boltzmann_factor,posterior_pdf\n");
    for (i, &u) in points.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            sig17(u),
            sig17(normal_pdf(u, prior_mean, prior_std)),
            sig17(((min_cost - costs[i]) / lambda).exp()),
            sig17(density.values[i]),
        ));
    }
    out
}

fn cmd_posterior(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let grid = grid1d(cfg)?;
    let cost = cfg.cost_fn();
    let mut written = Vec::new();
    let mut moments_csv =
        String::from("lambda,normalizer,mean,variance,entropy,expected_cost,modes\n");
    for &lambda in &cfg.posterior_lambdas {
        let density = grid_posterior(cost, cfg.prior_mean, cfg.prior_std, lambda, &grid)?;
        let csv = density_csv(&density, cost, cfg.prior_mean, cfg.prior_std, lambda);
        written.push(write_text(dir, &format!("density_lambda{lambda}.csv"), &csv)?);
        let m = posterior_moments(&density);
        let modes = count_modes(&density, cfg.posterior_mode_threshold)?;
        moments_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sig17(lambda),
            sig17(density.normalizer),
            sig17(m.mean),
            sig17(m.variance),
            sig17(m.entropy),
            sig17(expected_value(&density, cost)),
            modes,
        ));
    }
    written.push(write_text(dir, "moments.csv", &moments_csv)?);
    Ok(written)
}

/// The scalar static problem: one step, one state that never moves, stage
/// cost `J(u)`, inputs confined to the grid interval so that the sampler and
/// the quadrature oracle describe the same domain.
fn static_problem(cfg: &ExperimentConfig) -> Result<Problem, CliError> {
    let cost = cfg.cost_fn();
    let problem = Problem::new(
        1,
        1,
        1,
        Box::new(|x: &DVector<f64>, _u: &DVector<f64>| x.clone()),
        Box::new(move |_x: &DVector<f64>, u: &DVector<f64>, _t: usize| cost(u[0])),
        Box::new(|_x: &DVector<f64>| 0.0),
    )?
    .with_input_bounds(
        DVector::from_element(1, cfg.grid_lo),
        DVector::from_element(1, cfg.grid_hi),
    )?;
    Ok(problem)
}

/// On the static problem the sampling policy *is* the configured prior.
fn static_solver_config(
    cfg: &ExperimentConfig,
    samples: usize,
    lambda: f64,
) -> Result<SolverConfig, CliError> {
    Ok(SolverConfig::new(
        samples,
        lambda,
        DVector::from_element(1, cfg.prior_std),
        cfg.solver_warm_start_fill,
        SeedSpec::new(cfg.seed, 0),
    )?)
}

fn static_prior(cfg: &ExperimentConfig) -> ControlSequence {
    ControlSequence::new(DMatrix::from_element(1, 1, cfg.prior_mean))
}

fn scalar_solution(report: &SolveReport) -> f64 {
    report.solution.matrix()[(0, 0)]
}

fn cmd_solve(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let problem = static_problem(cfg)?;
    let solver = static_solver_config(cfg, cfg.solver_samples, cfg.solver_lambda)?;
    let report = plan_step(
        &problem,
        &DVector::zeros(1),
        &static_prior(cfg),
        &solver,
        cfg.solver_planner,
    )?;
    let density =
        grid_posterior(cfg.cost_fn(), cfg.prior_mean, cfg.prior_std, cfg.solver_lambda, &grid1d(cfg)?)?;
    let oracle_mean = posterior_moments(&density).mean;
    let solution = scalar_solution(&report);
    let mut csv = String::from(
        "planner,samples,lambda,solution,solution_cost,ess,min_cost,mean_cost,oracle_mean,abs_error\n",
    );
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        cfg.solver_planner.as_str(),
        cfg.solver_samples,
        sig17(cfg.solver_lambda),
        sig17(solution),
        sig17(report.solution_cost),
        sig17(report.ess),
        sig17(report.min_cost),
        sig17(report.mean_cost),
        sig17(oracle_mean),
        sig17((solution - oracle_mean).abs()),
    ));
    Ok(vec![write_text(dir, "solve.csv", &csv)?])
}

/// Solver settings for the closed-loop task, with `solver.std` broadcast to
/// the two acceleration inputs.
fn loop_solver_config(
    cfg: &ExperimentConfig,
    samples: usize,
    master_seed: u64,
) -> Result<SolverConfig, CliError> {
    let std = match cfg.solver_std.len() {
        1 => DVector::from_element(2, cfg.solver_std[0]),
        2 => DVector::from_vec(cfg.solver_std.clone()),
        n => {
            return Err(CliError::Config(format!(
                "solver.std needs 1 or 2 entries for the planar task, got {n}"
            )))
        }
    };
    Ok(SolverConfig::new(
        samples,
        cfg.solver_lambda,
        std,
        cfg.solver_warm_start_fill,
        SeedSpec::new(master_seed, 0),
    )?)
}

fn cmd_simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let env = cfg.environment();
    let solver = loop_solver_config(cfg, cfg.solver_samples, cfg.seed)?;
    let model = cfg.planner_model();
    match mpc_run(&env, cfg.solver_planner, &solver, &model) {
        Ok(log) => Ok(vec![
            write_text(dir, "trace.csv", &log.trace_csv())?,
            write_text(dir, "run.txt", &log.summary_text())?,
        ]),
        Err(aborted) => {
            write_text(dir, "trace_partial.csv", &aborted.partial.trace_csv())?;
            write_text(dir, "run_partial.txt", &aborted.partial.summary_text())?;
            Err(CliError::Runtime(aborted.to_string()))
        }
    }
}

struct CompareRun {
    planner: Planner,
    samples: usize,
    master_seed: u64,
    log: RunLog,
    error: Option<String>,
}

fn cmd_compare(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if cfg.compare_seeds == 0 {
        return Err(CliError::Config("compare.seeds must be at least 1".into()));
    }
    if cfg.compare_samples.is_empty() {
        return Err(CliError::Config("compare.samples must list at least one count".into()));
    }
    let env = cfg.environment();
    let model = cfg.planner_model();
    let mut jobs = Vec::new();
    for planner in [Planner::Mppi, Planner::RandomShooting] {
        for &samples in &cfg.compare_samples {
            for i in 0..cfg.compare_seeds {
                jobs.push((planner, samples, cfg.seed.wrapping_add(i as u64)));
            }
        }
    }
    // Cells run in parallel; a failed run becomes a row, not an abort.
    let results: Vec<CompareRun> = jobs
        .par_iter()
        .map(|&(planner, samples, master_seed)| -> Result<CompareRun, CliError> {
            let solver = loop_solver_config(cfg, samples, master_seed)?;
            let (log, error) = match mpc_run(&env, planner, &solver, &model) {
                Ok(log) => (log, None),
                Err(aborted) => {
                    let message = aborted.to_string();
                    (*aborted.partial, Some(message))
                }
            };
            Ok(CompareRun { planner, samples, master_seed, log, error })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let traces_dir = dir.join("traces");
    std::fs::create_dir_all(&traces_dir)?;
    let mut written = Vec::new();
    for r in &results {
        let name = format!("{}_k{}_seed{}.csv", r.planner.as_str(), r.samples, r.master_seed);
        written.push(write_text(&traces_dir, &name, &r.log.trace_csv())?);
    }

    let mut runs_csv = String::from("planner,samples,seed,outcome,steps,total_cost,error\n");
    for r in &results {
        let outcome = if r.error.is_some() { "error" } else { r.log.outcome.as_str() };
        runs_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.planner.as_str(),
            r.samples,
            r.master_seed,
            outcome,
            r.log.steps(),
            sig17(r.log.total_cost),
            sanitize(r.error.as_deref().unwrap_or("")),
        ));
    }
    written.push(write_text(dir, "runs.csv", &runs_csv)?);

    // Cost and step statistics are over goal-reaching runs only: a run that
    // collides ends early and cheap, so mixing it into the medians would
    // reward crashing.
    let mut summary_csv = String::from(
        "planner,samples,runs,errors,success_rate,median_cost,mean_cost,median_steps\n",
    );
    for planner in [Planner::Mppi, Planner::RandomShooting] {
        for &samples in &cfg.compare_samples {
            let cell: Vec<&CompareRun> = results
                .iter()
                .filter(|r| r.planner == planner && r.samples == samples)
                .collect();
            let errors = cell.iter().filter(|r| r.error.is_some()).count();
            let reached: Vec<&CompareRun> = cell
                .iter()
                .copied()
                .filter(|r| r.error.is_none() && r.log.outcome == Outcome::ReachedGoal)
                .collect();
            let costs: Vec<f64> = reached.iter().map(|r| r.log.total_cost).collect();
            let steps: Vec<f64> = reached.iter().map(|r| r.log.steps() as f64).collect();
            summary_csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                planner.as_str(),
                samples,
                cell.len(),
                errors,
                sig17(reached.len() as f64 / cell.len() as f64),
                sig17(median(&costs)),
                sig17(mean(&costs)),
                sig17(median(&steps)),
            ));
        }
    }
    written.push(write_text(dir, "summary.csv", &summary_csv)?);
    Ok(written)
}

fn cmd_sweep_lambda(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let grid = grid1d(cfg)?;
    let cost = cfg.cost_fn();
    let problem = static_problem(cfg)?;
    let prior = static_prior(cfg);
    let x0 = DVector::zeros(1);
    let mut csv = String::from(
        "lambda,mean,variance,entropy,expected_cost,modes,mppi_solution,mppi_ess,abs_error\n",
    );
    for &lambda in &cfg.sweep_lambdas {
        let density = grid_posterior(cost, cfg.prior_mean, cfg.prior_std, lambda, &grid)?;
        let m = posterior_moments(&density);
        let modes = count_modes(&density, cfg.posterior_mode_threshold)?;
        let solver = static_solver_config(cfg, cfg.solver_samples, lambda)?;
        let report = mppi_step(&problem, &x0, &prior, &solver)?;
        let solution = scalar_solution(&report);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            sig17(lambda),
            sig17(m.mean),
            sig17(m.variance),
            sig17(m.entropy),
            sig17(expected_value(&density, cost)),
            modes,
            sig17(solution),
            sig17(report.ess),
            sig17((solution - m.mean).abs()),
        ));
    }
    Ok(vec![write_text(dir, "sweep_lambda.csv", &csv)?])
}

fn cmd_sweep_samples(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let problem = static_problem(cfg)?;
    let prior = static_prior(cfg);
    let x0 = DVector::zeros(1);
    let density = grid_posterior(
        cfg.cost_fn(),
        cfg.prior_mean,
        cfg.prior_std,
        cfg.solver_lambda,
        &grid1d(cfg)?,
    )?;
    let oracle_mean = posterior_moments(&density).mean;
    let mut csv = String::from("samples,solution,solution_cost,ess,oracle_mean,abs_error\n");
    for &samples in &cfg.sweep_samples {
        let solver = static_solver_config(cfg, samples, cfg.solver_lambda)?;
        let report = mppi_step(&problem, &x0, &prior, &solver)?;
        let solution = scalar_solution(&report);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            samples,
            sig17(solution),
            sig17(report.solution_cost),
            sig17(report.ess),
            sig17(oracle_mean),
            sig17((solution - oracle_mean).abs()),
        ));
    }
    Ok(vec![write_text(dir, "sweep_samples.csv", &csv)?])
}

fn cmd_sweep_prior(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let grid = grid1d(cfg)?;
    let cost = cfg.cost_fn();
    let lambda = cfg.solver_lambda;
    let mut written = Vec::new();
    let mut csv = String::from("prior_mean,prior_std,mean,variance,entropy,expected_cost,modes\n");
    for &mu in &cfg.sweep_prior_means {
        for &sigma in &cfg.sweep_prior_stds {
            let density = grid_posterior(cost, mu, sigma, lambda, &grid)?;
            let name = format!("density_mu{mu}_sigma{sigma}.csv");
            written.push(write_text(dir, &name, &density_csv(&density, cost, mu, sigma, lambda))?);
            let m = posterior_moments(&density);
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sig17(mu),
                sig17(sigma),
                sig17(m.mean),
                sig17(m.variance),
                sig17(m.entropy),
                sig17(expected_value(&density, cost)),
                count_modes(&density, cfg.posterior_mode_threshold)?,
            ));
        }
    }
    written.push(write_text(dir, "sweep_prior.csv", &csv)?);
    Ok(written)
}

fn cmd_symmetry(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut env = cfg.environment();
    if env.obstacles.is_empty() {
        return Err(CliError::Config(
            "symmetry needs env.obstacles to contain at least one obstacle".into(),
        ));
    }
    env.obstacles[0].y += cfg.symmetry_offset_radii * env.obstacles[0].radius;
    let solver = loop_solver_config(cfg, cfg.solver_samples, cfg.seed)?;
    let model = cfg.planner_model();
    let stats = symmetry_scenario_stats(&env, cfg.solver_planner, &solver, &model, cfg.symmetry_seeds)?;

    let mut runs_csv = String::from("seed,outcome,side,commit_step,total_cost\n");
    for run in &stats.runs {
        runs_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            run.master_seed,
            run.outcome.as_str(),
            run.side.map(CrossSide::as_str).unwrap_or(""),
            run.commit_step.map(|s| s.to_string()).unwrap_or_default(),
            sig17(run.total_cost),
        ));
    }

    let left = stats.runs.iter().filter(|r| r.side == Some(CrossSide::Left)).count();
    let right = stats.runs.iter().filter(|r| r.side == Some(CrossSide::Right)).count();
    let commit_steps: Vec<f64> = stats.commit_steps.iter().map(|&s| s as f64).collect();
    let mut summary_csv =
        String::from("seeds,crossed,left,right,left_fraction,committed,median_commit_step\n");
    summary_csv.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        stats.runs.len(),
        stats.crossed,
        left,
        right,
        sig17(stats.left_fraction),
        stats.commit_steps.len(),
        sig17(median(&commit_steps)),
    ));

    Ok(vec![
        write_text(dir, "runs.csv", &runs_csv)?,
        write_text(dir, "summary.csv", &summary_csv)?,
    ])
}
