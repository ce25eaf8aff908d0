//! The release gate: ten checks covering oracle quality, solver/oracle
//! agreement, softmax algebra, qualitative orderings, closed-loop behavior,
//! and reproducibility. Each test prints one `criterion N: PASS|FAIL` line
//! (visible with `--nocapture`) and then asserts.
//!
//! Every tolerance and budget is pinned here as a named constant.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smpc_cli::commands::{run, Verb};
use smpc_cli::config::ExperimentConfig;
use smpc_core::nalgebra::{DMatrix, DVector};
use smpc_core::posterior::{grid_posterior, kl_forward, posterior_moments, Grid1D};
use smpc_core::sampling::{GaussianSequencePolicy, SeedSpec, WarmStartFill};
use smpc_core::solver::{mppi_step, random_shooting_step, SolverConfig};
use smpc_core::weights::softmax_weights;
use smpc_core::{ControlSequence, Problem};

/// Quadrature mass may deviate from 1 by at most this much.
const NORMALIZATION_TOL: f64 = 1e-6;
/// Budget for constructing one density.
const DENSITY_TIME_BUDGET: Duration = Duration::from_secs(1);
/// Batch size, seed count, required passes, and budget for the solver-vs-
/// oracle agreement check.
const ORACLE_SAMPLES: usize = 200_000;
const ORACLE_SEEDS: u64 = 50;
const ORACLE_MIN_PASSES: usize = 48;
const ORACLE_TIME_BUDGET: Duration = Duration::from_secs(30);
/// Vanishing-temperature output must match the best sample this closely.
const SHARP_TOL: f64 = 1e-9;
/// Infinite-temperature output must match the batch mean within this times
/// the sampling standard deviation.
const FLAT_TOL_PER_STD: f64 = 1e-6;
/// Batches for the softmax property sweep, and the weight-sum tolerance.
const SOFTMAX_BATCHES: usize = 1000;
const WEIGHT_SUM_TOL: f64 = 1e-9;
/// Budget for the planner benchmark comparison.
const COMPARE_TIME_BUDGET: Duration = Duration::from_secs(120);
/// Budget and acceptance band for the passage-symmetry experiment.
const SYMMETRY_TIME_BUDGET: Duration = Duration::from_secs(300);
const SYMMETRY_BAND: (f64, f64) = (0.35, 0.65);
/// Random configurations for the KL stationarity check.
const KL_CONFIGS: usize = 10;

fn criterion(n: usize, pass: bool, detail: String) {
    println!("criterion {n}: {}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n}: {detail}");
}

fn oscillatory(u: f64) -> f64 {
    0.6 * u * u * (5.0 * PI * u).sin()
}

fn scalar_problem(
    cost: impl Fn(f64) -> f64 + Send + Sync + 'static,
    lo: f64,
    hi: f64,
) -> Problem {
    Problem::new(
        1,
        1,
        1,
        Box::new(|x: &DVector<f64>, _u: &DVector<f64>| x.clone()),
        Box::new(move |_x: &DVector<f64>, u: &DVector<f64>, _t: usize| cost(u[0])),
        Box::new(|_x: &DVector<f64>| 0.0),
    )
    .unwrap()
    .with_input_bounds(DVector::from_element(1, lo), DVector::from_element(1, hi))
    .unwrap()
}

fn scalar_of(report: &smpc_core::SolveReport) -> f64 {
    report.solution.matrix()[(0, 0)]
}

fn trapezoid_mass(values: &[f64], spacing: f64) -> f64 {
    let sum: f64 = values.iter().sum();
    spacing * (sum - 0.5 * (values[0] + values[values.len() - 1]))
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn repo_recipe(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .unwrap()
        .join("recipes")
        .join(name);
    ExperimentConfig::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn acceptance_01_density_normalization_and_speed() {
    // Grid, prior mean, prior std for each density family the toolkit ships.
    let cases: [(f64, f64, usize, f64, f64, &[f64]); 4] = [
        (-2.0, 2.0, 1601, 0.0, 2.0, &[0.05, 0.5, 5.0]),
        (-6.0, 6.0, 4801, -2.0, 1.0, &[0.05, 0.5, 5.0]),
        (-3.2, 2.4, 2241, -3.0, 0.25, &[0.8]),
        (-3.2, 2.4, 2241, 0.0, 1.0, &[0.8]),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (lo, hi, n, mean, std, lambdas) in cases {
        let grid = Grid1D::new(lo, hi, n).unwrap();
        for &lambda in lambdas {
            let t0 = Instant::now();
            let density = grid_posterior(oscillatory, mean, std, lambda, &grid).unwrap();
            let elapsed = t0.elapsed();
            let mass = trapezoid_mass(&density.values, grid.spacing());
            let ok = (mass - 1.0).abs() <= NORMALIZATION_TOL && elapsed <= DENSITY_TIME_BUDGET;
            if !ok {
                detail = format!(
                    "grid [{lo}, {hi}] n={n} lambda={lambda}: mass={mass}, took {elapsed:?}"
                );
            }
            pass &= ok;
        }
    }
    criterion(1, pass, detail);
}

#[test]
fn acceptance_02_solver_agrees_with_the_quadrature_oracle() {
    let t0 = Instant::now();
    let grid = Grid1D::new(-3.0, 3.0, 9601).unwrap();
    let density = grid_posterior(oscillatory, -2.0, 1.0, 0.5, &grid).unwrap();
    let moments = posterior_moments(&density);
    let sigma = moments.variance.sqrt();
    let problem = scalar_problem(oscillatory, -3.0, 3.0);
    let prior = ControlSequence::new(DMatrix::from_element(1, 1, -2.0));
    let x0 = DVector::zeros(1);
    let mut passes = 0;
    for s in 0..ORACLE_SEEDS {
        let solver = SolverConfig::new(
            ORACLE_SAMPLES,
            0.5,
            DVector::from_element(1, 1.0),
            WarmStartFill::RepeatLast,
            SeedSpec::new(100 + s, 0),
        )
        .unwrap();
        let report = mppi_step(&problem, &x0, &prior, &solver).unwrap();
        let error = (scalar_of(&report) - moments.mean).abs();
        if error < 3.0 * sigma / report.ess.sqrt() {
            passes += 1;
        }
    }
    let elapsed = t0.elapsed();
    criterion(
        2,
        passes >= ORACLE_MIN_PASSES && elapsed <= ORACLE_TIME_BUDGET,
        format!("{passes}/{ORACLE_SEEDS} seeds within bound, elapsed {elapsed:?}"),
    );
}

#[test]
fn acceptance_03_temperature_limits() {
    let problem = scalar_problem(oscillatory, -3.0, 3.0);
    let prior = ControlSequence::new(DMatrix::from_element(1, 1, -2.0));
    let x0 = DVector::zeros(1);
    let std = 1.0;
    let mut pass = true;
    let mut detail = String::new();
    for s in 0..10u64 {
        let seed = SeedSpec::new(300 + s, 0);
        let config = |lambda: f64| {
            SolverConfig::new(
                4096,
                lambda,
                DVector::from_element(1, std),
                WarmStartFill::RepeatLast,
                seed,
            )
            .unwrap()
        };

        let sharp = mppi_step(&problem, &x0, &prior, &config(1e-9)).unwrap();
        let best_sample = random_shooting_step(&problem, &x0, &prior, &config(1e-9)).unwrap();
        let sharp_gap = (scalar_of(&sharp) - scalar_of(&best_sample)).abs();

        let flat = mppi_step(&problem, &x0, &prior, &config(1e9)).unwrap();
        let policy = GaussianSequencePolicy::new(
            DMatrix::from_element(1, 1, -2.0),
            DVector::from_element(1, std),
        )
        .unwrap();
        let batch = policy.sample_batch(4096, &seed);
        let batch_mean = batch
            .iter()
            .map(|seq| problem.clamp(seq).unwrap().matrix()[(0, 0)])
            .sum::<f64>()
            / 4096.0;
        let flat_gap = (scalar_of(&flat) - batch_mean).abs();

        let ok = sharp_gap <= SHARP_TOL && flat_gap <= FLAT_TOL_PER_STD * std;
        if !ok {
            detail =
                format!("seed {s}: argmin gap {sharp_gap:e}, batch-mean gap {flat_gap:e}");
        }
        pass &= ok;
    }
    criterion(3, pass, detail);
}

#[test]
fn acceptance_04_softmax_weight_properties() {
    // Costs on the 1/1024 lattice below 2^16 and shifts below 2^10 keep every
    // subtraction exact in f64, making shift invariance a bit-level property.
    let lattice = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let mut rng = ChaCha8Rng::seed_from_u64(4040);
    let mut pass = true;
    let mut detail = String::new();
    for batch in 0..SOFTMAX_BATCHES {
        let k = rng.random_range(2usize..=64);
        let costs: Vec<f64> =
            (0..k).map(|_| rng.random_range(0u32..65536) as f64 / 1024.0).collect();
        let shift = (rng.random_range(0i64..(1 << 21)) - (1 << 20)) as f64 / 1024.0;
        let lambda = lattice[batch % lattice.len()];

        let w = softmax_weights(&costs, lambda).unwrap();
        let shifted: Vec<f64> = costs.iter().map(|c| c + shift).collect();
        let w_shifted = softmax_weights(&shifted, lambda).unwrap();

        let bit_exact = w.ess.to_bits() == w_shifted.ess.to_bits()
            && w
                .weights
                .iter()
                .zip(&w_shifted.weights)
                .all(|(a, b)| a.to_bits() == b.to_bits());

        let mut monotone = true;
        for i in 0..k {
            for j in 0..k {
                if costs[i] < costs[j] {
                    monotone &= w.weights[i] > w.weights[j];
                } else if costs[i] == costs[j] {
                    monotone &= w.weights[i] == w.weights[j];
                }
            }
        }

        let sum: f64 = w.weights.iter().sum();
        let normalized = (sum - 1.0).abs() <= WEIGHT_SUM_TOL;

        if !(bit_exact && monotone && normalized) {
            detail = format!(
                "batch {batch}: bit_exact={bit_exact} monotone={monotone} sum={sum}"
            );
        }
        pass &= bit_exact && monotone && normalized;
    }
    criterion(4, pass, detail);
}

#[test]
fn acceptance_05_entropy_increases_with_temperature() {
    let scratch = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.out = scratch.path().display().to_string();
    cfg.prior_mean = -2.0;
    cfg.prior_std = 1.0;
    cfg.grid_lo = -6.0;
    cfg.grid_hi = 6.0;
    cfg.grid_points = 96001;
    cfg.sweep_lambdas = vec![0.01, 0.1, 1.0, 10.0, 100.0];
    cfg.solver_samples = 512;
    let written = run(Verb::SweepLambda, &cfg).unwrap();
    let rows = read_rows(&written[0]);
    let entropies: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    let pass = entropies.windows(2).all(|w| w[0] < w[1]);
    criterion(5, pass, format!("entropies = {entropies:?}"));
}

#[test]
fn acceptance_06_prior_design_ranks_expected_cost() {
    let scratch = tempfile::tempdir().unwrap();
    let mut cfg = repo_recipe("fig7.cfg");
    cfg.out = scratch.path().display().to_string();
    let written = run(Verb::SweepPrior, &cfg).unwrap();
    let rows = read_rows(written.last().unwrap());
    assert_eq!(rows.len(), 4);
    // Row order is the cartesian product: (-3, 0.25), (-3, 1), (0, 0.25), (0, 1).
    let ej: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    let near_narrow_best = (0..4).all(|i| i == 0 || ej[0] < ej[i]);
    let far_narrow_worst = (0..4).all(|i| i == 2 || ej[2] > ej[i]);
    criterion(
        6,
        near_narrow_best && far_narrow_worst,
        format!("expected costs = {ej:?}"),
    );
}

#[test]
fn acceptance_07_sample_efficiency_beats_the_baseline() {
    let t0 = Instant::now();
    let scratch = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.out = scratch.path().display().to_string();
    cfg.seed = 1000;
    cfg.solver_lambda = 1.0;
    cfg.solver_std = vec![1.0];
    cfg.compare_samples = vec![64];
    cfg.compare_seeds = 30;
    let written = run(Verb::Compare, &cfg).unwrap();
    let rows = read_rows(written.last().unwrap());
    assert_eq!(rows.len(), 2);
    let (mppi, shooting) = (&rows[0], &rows[1]);
    assert_eq!(mppi[0], "mppi");
    assert_eq!(shooting[0], "random_shooting");
    let mppi_rate: f64 = mppi[4].parse().unwrap();
    let shooting_rate: f64 = shooting[4].parse().unwrap();
    let mppi_median: f64 = mppi[5].parse().unwrap();
    let shooting_median: f64 = shooting[5].parse().unwrap();
    let elapsed = t0.elapsed();
    criterion(
        7,
        mppi_rate >= shooting_rate
            && mppi_median <= shooting_median
            && elapsed <= COMPARE_TIME_BUDGET,
        format!(
            "success {mppi_rate} vs {shooting_rate}, median cost {mppi_median} vs \
             {shooting_median}, elapsed {elapsed:?}"
        ),
    );
}

#[test]
fn acceptance_08_symmetry_breaks_by_seed_until_the_obstacle_moves() {
    let t0 = Instant::now();
    let scratch = tempfile::tempdir().unwrap();
    let mut cfg = repo_recipe("fig6.cfg");

    cfg.out = scratch.path().join("centered").display().to_string();
    let written = run(Verb::Symmetry, &cfg).unwrap();
    let centered: f64 = read_rows(written.last().unwrap())[0][4].parse().unwrap();

    cfg.symmetry_offset_radii = 3.0;
    cfg.out = scratch.path().join("offset").display().to_string();
    let written = run(Verb::Symmetry, &cfg).unwrap();
    let offset: f64 = read_rows(written.last().unwrap())[0][4].parse().unwrap();

    let elapsed = t0.elapsed();
    criterion(
        8,
        centered >= SYMMETRY_BAND.0
            && centered <= SYMMETRY_BAND.1
            && (offset == 0.0 || offset == 1.0)
            && elapsed <= SYMMETRY_TIME_BUDGET,
        format!("centered fraction {centered}, offset fraction {offset}, elapsed {elapsed:?}"),
    );
}

#[test]
fn acceptance_09_outputs_are_thread_count_invariant() {
    fn tree(dir: &Path, root: &Path, into: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                tree(&path, root, into);
            } else {
                into.insert(
                    path.strip_prefix(root).unwrap().display().to_string(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }

    let verbs: [(Verb, fn(&mut ExperimentConfig)); 8] = [
        (Verb::Posterior, |c| {
            c.grid_points = 401;
            c.posterior_lambdas = vec![0.5, 5.0];
        }),
        (Verb::Solve, |c| c.solver_samples = 2048),
        (Verb::Simulate, |c| c.solver_samples = 128),
        (Verb::Compare, |c| {
            c.compare_samples = vec![16, 64];
            c.compare_seeds = 4;
        }),
        (Verb::SweepLambda, |c| {
            c.grid_points = 401;
            c.sweep_lambdas = vec![0.1, 1.0, 10.0];
            c.solver_samples = 256;
        }),
        (Verb::SweepSamples, |c| {
            c.grid_points = 401;
            c.sweep_samples = vec![16, 64, 256];
        }),
        (Verb::SweepPrior, |c| {
            c.grid_points = 401;
            c.sweep_prior_means = vec![-3.0, 0.0];
            c.sweep_prior_stds = vec![1.0];
        }),
        (Verb::Symmetry, |c| {
            c.solver_samples = 64;
            c.symmetry_seeds = 8;
        }),
    ];

    let mut pass = true;
    let mut detail = String::new();
    for (verb, tweak) in verbs {
        let scratch = tempfile::tempdir().unwrap();
        let mut trees = Vec::new();
        for threads in [1usize, 8] {
            let mut cfg = ExperimentConfig::default();
            cfg.seed = 11;
            tweak(&mut cfg);
            cfg.threads = threads;
            let out = scratch.path().join(format!("t{threads}"));
            cfg.out = out.display().to_string();
            run(verb, &cfg).unwrap();
            let mut t = BTreeMap::new();
            tree(&out, &out, &mut t);
            trees.push(t);
        }
        if trees[0] != trees[1] {
            detail = format!("{verb:?} differs between 1 and 8 threads");
            pass = false;
        }
    }
    criterion(9, pass, detail);
}

#[test]
fn acceptance_10_kl_scan_recovers_the_posterior_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let grid = Grid1D::new(-6.0, 6.0, 2401).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for case in 0..KL_CONFIGS {
        let amplitude = rng.random_range(0.3..1.2);
        let prior_mean = rng.random_range(-2.0..2.0);
        let prior_std = rng.random_range(0.3..1.5);
        let lambda = rng.random_range(0.1f64.ln()..5.0f64.ln()).exp();
        let cost = move |u: f64| amplitude * u * u * (5.0 * PI * u).sin();
        let density = grid_posterior(cost, prior_mean, prior_std, lambda, &grid).unwrap();
        let moments = posterior_moments(&density);
        let q_std = moments.variance.sqrt();
        let argmin = grid
            .points()
            .iter()
            .map(|&q| kl_forward(&density, q, q_std).unwrap())
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| grid.point(i))
            .unwrap();
        let gap = (argmin - moments.mean).abs();
        let ok = gap <= grid.spacing() + 1e-12;
        if !ok {
            detail = format!(
                "case {case}: amplitude {amplitude:.3}, prior ({prior_mean:.3}, \
                 {prior_std:.3}), lambda {lambda:.3}: argmin off by {gap:e}"
            );
        }
        pass &= ok;
    }
    criterion(10, pass, detail);
}
