use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::intent::{sample_human_observation, Belief, HumanParams, PreferenceModel};
use crate::pathcost::CostEvaluator;
use crate::planning::{compliant_policy, CompliantMemory, Planner};
use crate::worldgraph::World;

use super::{episode_rngs, sample_instance, EpisodeConfig, ExperimentError, Method};

pub const TIMING_COLUMNS: [&str; 8] = [
    "map",
    "polytopes",
    "method",
    "runs",
    "solve_ms_mean",
    "solve_ms_ci95",
    "update_ms_mean",
    "update_ms_ci95",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub map: String,
    pub polytopes: usize,
    pub method: Method,
    pub runs: usize,
    pub solve_ms_mean: f64,
    pub solve_ms_ci95: f64,
    pub update_ms_mean: f64,
    pub update_ms_ci95: f64,
}

/// Sample mean and the half-width of its normal-approximation 95% interval.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

fn ms(clock: Instant) -> f64 {
    clock.elapsed().as_secs_f64() * 1e3
}

/// Wall time of `n` cold belief updates, one per sampled instance: fresh
/// prior, fresh cost cache, first human heading at the start cell.
pub fn update_times(
    world: &World,
    model: PreferenceModel,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let inst = sample_instance(&mut rng, world, 0)?;
        let theta = inst.validate(world)?;
        let human = HumanParams {
            gamma_h: inst.gamma_h,
        };
        let s = inst.start;
        let obs = sample_human_observation(
            &mut rng,
            world,
            &mut CostEvaluator::new(),
            s,
            inst.true_goal_cell(),
            &theta,
            &human,
        )?;
        let belief = Belief::uniform(world, world.polytope_of(s), inst.goals.clone(), model)?;
        let mut eval = CostEvaluator::new();
        let clock = Instant::now();
        belief.update(world, &mut eval, s, &obs, &human)?;
        out.push(ms(clock));
    }
    Ok(out)
}

/// First-decision solve time and first belief-update time per method,
/// over `runs` sampled instances per map.
pub fn time_benchmark(
    worlds: &[World],
    methods: &[Method],
    runs: usize,
    seed: u64,
    config: &EpisodeConfig,
) -> Result<Vec<TimingRow>, ExperimentError> {
    let mut rows = Vec::new();
    for world in worlds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let instances = (0..runs)
            .map(|i| sample_instance(&mut rng, world, seed.wrapping_add(i as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        for &method in methods {
            let (mut solve, mut update) = (Vec::with_capacity(runs), Vec::with_capacity(runs));
            for inst in &instances {
                let theta = inst.validate(world)?;
                let human = HumanParams {
                    gamma_h: inst.gamma_h,
                };
                let (mut planner_rng, mut human_rng) = episode_rngs(inst.seed);
                let s = inst.start;
                let obs = sample_human_observation(
                    &mut human_rng,
                    world,
                    &mut CostEvaluator::new(),
                    s,
                    inst.true_goal_cell(),
                    &theta,
                    &human,
                )?;
                if method == Method::Compliant {
                    let mut memory = CompliantMemory::default();
                    memory.observe(obs.heading, 0);
                    let clock = Instant::now();
                    compliant_policy(world, s, &memory, 0);
                    solve.push(ms(clock));
                    continue;
                }
                let belief = Belief::uniform(
                    world,
                    world.polytope_of(s),
                    inst.goals.clone(),
                    method.model(),
                )?;
                let mut eval = CostEvaluator::new();
                let clock = Instant::now();
                let belief = belief.update(world, &mut eval, s, &obs, &human)?;
                update.push(ms(clock));
                let mut planner = Planner::new(world, config.planner, config.reward)?;
                let clock = Instant::now();
                planner.plan(&belief, s, inst.t_max, &mut planner_rng)?;
                solve.push(ms(clock));
            }
            let (solve_ms_mean, solve_ms_ci95) = mean_ci95(&solve);
            let (update_ms_mean, update_ms_ci95) = mean_ci95(&update);
            rows.push(TimingRow {
                map: world.name.clone(),
                polytopes: world.graph.vertices().len(),
                method,
                runs,
                solve_ms_mean,
                solve_ms_ci95,
                update_ms_mean,
                update_ms_ci95,
            });
        }
    }
    Ok(rows)
}
