//! Closed-loop behavior of the planners on the benchmark scene, at sizes
//! small enough for routine test runs.

use nalgebra::DVector;
use smpc_core::sampling::{SeedSpec, WarmStartFill};
use smpc_core::sim::{
    mpc_run, symmetry_scenario_stats, Environment, Outcome, PlannerModel,
};
use smpc_core::solver::{Planner, SolverConfig};

fn solver(samples: usize, std: f64, master: u64) -> SolverConfig {
    SolverConfig::new(
        samples,
        1.0,
        DVector::from_element(2, std),
        WarmStartFill::RepeatLast,
        SeedSpec::new(master, 0),
    )
    .unwrap()
}

#[test]
fn both_planners_clear_the_benchmark_scene() {
    let env = Environment::benchmark();
    let model = PlannerModel::default();
    for (planner, required) in [(Planner::Mppi, 5), (Planner::RandomShooting, 4)] {
        let mut reached = 0;
        for seed in 0..6 {
            let log = mpc_run(&env, planner, &solver(64, 1.0, 500 + seed), &model).unwrap();
            if log.outcome == Outcome::ReachedGoal {
                reached += 1;
            }
        }
        assert!(reached >= required, "{}: only {reached}/6 runs arrived", planner.as_str());
    }
}

#[test]
fn model_mismatch_degrades_gracefully() {
    // A plant that under-delivers 10% of the commanded acceleration should
    // still be driven home by the receding-horizon loop.
    let mut env = Environment::benchmark();
    env.plant_accel_scale = 0.9;
    let log = mpc_run(&env, Planner::Mppi, &solver(64, 1.0, 700), &PlannerModel::default()).unwrap();
    assert_eq!(log.outcome, Outcome::ReachedGoal, "{}", log.summary_text());
}

#[test]
fn process_noise_keeps_runs_reproducible_but_distinct() {
    let mut env = Environment::benchmark();
    env.process_noise_std = [0.0, 0.0, 0.02, 0.02];
    let cfg = solver(64, 1.0, 701);
    let model = PlannerModel::default();
    let a = mpc_run(&env, Planner::Mppi, &cfg, &model).unwrap();
    let b = mpc_run(&env, Planner::Mppi, &cfg, &model).unwrap();
    assert_eq!(a, b);
    let other = mpc_run(&env, Planner::Mppi, &solver(64, 1.0, 702), &model).unwrap();
    assert_ne!(a.records, other.records);
}

#[test]
fn centered_obstacle_splits_traffic_between_sides() {
    let env = Environment::benchmark();
    let stats = symmetry_scenario_stats(
        &env,
        Planner::Mppi,
        &solver(64, 1.0, 2000),
        &PlannerModel::default(),
        24,
    )
    .unwrap();
    assert_eq!(stats.runs.len(), 24);
    assert!(stats.crossed >= 20, "only {} runs crossed", stats.crossed);
    assert!(
        stats.left_fraction > 0.0 && stats.left_fraction < 1.0,
        "left fraction {}; a symmetric scene must see both sides",
        stats.left_fraction
    );
}

#[test]
fn offset_obstacle_forces_one_side() {
    let mut env = Environment::benchmark();
    // Three radii off-center: the short way around no longer crosses it.
    env.obstacles[0].y += 3.0 * env.obstacles[0].radius;
    let stats = symmetry_scenario_stats(
        &env,
        Planner::Mppi,
        &solver(64, 1.0, 3000),
        &PlannerModel::default(),
        12,
    )
    .unwrap();
    assert_eq!(stats.crossed, 12);
    assert!(
        stats.left_fraction == 0.0 || stats.left_fraction == 1.0,
        "left fraction {} should be unanimous",
        stats.left_fraction
    );
}

#[test]
fn narrower_exploration_commits_no_earlier() {
    let env = Environment::benchmark();
    let model = PlannerModel::default();
    let median_commit = |std: f64| {
        let stats =
            symmetry_scenario_stats(&env, Planner::Mppi, &solver(64, std, 4000), &model, 30)
                .unwrap();
        let mut commits = stats.commit_steps.clone();
        assert!(!commits.is_empty());
        commits.sort_unstable();
        commits[commits.len() / 2] as f64
    };
    let narrow = median_commit(0.5);
    let wide = median_commit(1.0);
    assert!(
        narrow >= wide,
        "median commit step {narrow} (std 0.5) vs {wide} (std 1.0): \
         less exploration should not commit earlier"
    );
}
