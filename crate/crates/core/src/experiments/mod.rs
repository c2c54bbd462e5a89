//! Episode runner, instance sampling, sweeps and timing benchmarks.

mod sweep;
mod timing;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sweep::{ranking, sweep, write_csv, SweepConfig, SweepRow, SWEEP_COLUMNS};
pub use timing::{mean_ci95, time_benchmark, update_times, TimingRow, TIMING_COLUMNS};

use crate::intent::{
    sample_human_observation, Belief, HumanParams, IntentError, PreferenceModel,
    DEFAULT_BACK_EDGE_WEIGHT,
};
use crate::pathcost::CostEvaluator;
use crate::planning::{
    blended_policy, compliant_policy, CompliantMemory, Planner, PlannerConfig, PlanningError,
    RewardParams, DEFAULT_BLEND_THRESHOLD,
};
use crate::worldgraph::{Action, EdgeRef, GridPos, Preference, PreferenceSpec, World, WorldError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error("csv output failed: {0}")]
    Csv(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PathPref,
    GoalOnly,
    Compliant,
    Blended,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::PathPref,
        Method::GoalOnly,
        Method::Compliant,
        Method::Blended,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::PathPref => "path_pref",
            Method::GoalOnly => "goal_only",
            Method::Compliant => "compliant",
            Method::Blended => "blended",
        }
    }

    /// Hypothesis space of the robot's belief.
    pub fn model(self) -> PreferenceModel {
        match self {
            Method::GoalOnly => PreferenceModel::GoalOnly,
            _ => PreferenceModel::Joint,
        }
    }

    fn plans(self) -> bool {
        self != Method::Compliant
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown method {s:?}")))
    }
}

/// One navigation task: where the robot starts, what it may be asked to
/// reach, and the hidden truth the simulated human acts on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemInstance {
    pub map: String,
    pub start: GridPos,
    pub goals: Vec<GridPos>,
    pub true_goal: usize,
    pub preference: PreferenceSpec,
    #[serde(rename = "delta_T")]
    pub delta_t: u32,
    #[serde(rename = "T_max")]
    pub t_max: u32,
    pub gamma_h: f64,
    pub seed: u64,
}

impl ProblemInstance {
    /// The scenario stored in the map document itself.
    pub fn from_world(world: &World, seed: u64) -> Self {
        Self {
            map: world.name.clone(),
            start: world.map.start,
            goals: world.map.goal_candidates.clone(),
            true_goal: world.scenario.true_goal_index,
            preference: world.preference_spec(&world.scenario.preference),
            delta_t: world.scenario.delta_t,
            t_max: world.scenario.t_max,
            gamma_h: world.scenario.gamma_h,
            seed,
        }
    }

    pub fn true_goal_cell(&self) -> GridPos {
        self.goals[self.true_goal]
    }

    /// Checks the instance against `world` and resolves its preference.
    pub fn validate(&self, world: &World) -> Result<Preference, ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Instance(m));
        if self.map != world.name {
            return bad(format!(
                "instance is for map {:?}, not {:?}",
                self.map, world.name
            ));
        }
        if self.delta_t == 0 || self.t_max == 0 {
            return bad("delta_T and T_max must be at least 1".into());
        }
        if !(self.gamma_h.is_finite() && self.gamma_h >= 0.0) {
            return bad("gamma_h must be finite and nonnegative".into());
        }
        if self.true_goal >= self.goals.len() {
            return bad(format!("true goal index {} out of range", self.true_goal));
        }
        if !world.map.is_free(self.start) {
            return bad(format!("start {} is not free", self.start));
        }
        for (i, g) in self.goals.iter().enumerate() {
            if !world.map.is_free(*g) {
                return bad(format!("goal {i} at {g} is not free"));
            }
            if self.goals[..i].contains(g) {
                return bad(format!("duplicate goal {g}"));
            }
        }
        if self.start == self.true_goal_cell() {
            return bad("start coincides with the true goal".into());
        }
        Ok(world.resolve_preference(&self.preference)?)
    }
}

/// Draws a start and 3–5 goal candidates from distinct free cells, a true
/// goal among them, and keeps the map's own preference and timing.
pub fn sample_instance<R: Rng + ?Sized>(
    rng: &mut R,
    world: &World,
    seed: u64,
) -> Result<ProblemInstance, ExperimentError> {
    let free: Vec<GridPos> = world.map.free_cells().collect();
    let free_polytopes = world.graph.vertices().len();
    if free_polytopes < 2 {
        return Err(ExperimentError::Instance(format!(
            "map {} has {free_polytopes} free polytope(s), need 2",
            world.name
        )));
    }
    let k = rng.gen_range(3..=5);
    if free.len() < k + 1 {
        return Err(ExperimentError::Instance(format!(
            "map {} has only {} free cells",
            world.name,
            free.len()
        )));
    }
    let picks = sample(rng, free.len(), k + 1);
    let cells: Vec<GridPos> = picks.iter().map(|i| free[i]).collect();
    let true_goal = rng.gen_range(0..k);
    Ok(ProblemInstance {
        map: world.name.clone(),
        start: cells[0],
        goals: cells[1..].to_vec(),
        true_goal,
        preference: world.preference_spec(&world.scenario.preference),
        delta_t: world.scenario.delta_t,
        t_max: world.scenario.t_max,
        gamma_h: world.scenario.gamma_h,
        seed,
    })
}

/// Everything about the robot that is not part of the instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub planner: PlannerConfig,
    pub reward: RewardParams,
    pub back_edge_weight: f64,
    pub blend_threshold: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            planner: PlannerConfig::default(),
            reward: RewardParams::default(),
            back_edge_weight: DEFAULT_BACK_EDGE_WEIGHT,
            blend_threshold: DEFAULT_BLEND_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub t: u32,
    pub cell: GridPos,
    pub heading: Action,
}

/// Wall-clock measurements, kept out of the serialized result so that runs
/// with the same seed print identical output.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub solve_ms: Vec<f64>,
    pub update_ms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub map: String,
    pub method: Method,
    pub seed: u64,
    pub success: bool,
    pub reached_goal: bool,
    /// Time steps elapsed, including steps where the robot stood still.
    pub steps: u32,
    pub violations: u32,
    pub trajectory: Vec<GridPos>,
    pub crossings: Vec<EdgeRef>,
    pub observations: Vec<ObservationRecord>,
    /// Why the episode was aborted, if it was.
    pub failure: Option<String>,
    #[serde(skip)]
    pub timing: Timing,
}

/// Independent random streams of one episode: the robot's planner and the
/// simulated human never share state, so methods run on the same seed face
/// the same human draws for as long as their trajectories agree.
pub fn episode_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut planner = ChaCha8Rng::seed_from_u64(seed);
    planner.set_stream(1);
    let mut human = ChaCha8Rng::seed_from_u64(seed);
    human.set_stream(2);
    (planner, human)
}

/// Runs one episode. Human headings arrive at t = 0, Δ_T, 2Δ_T, …; the
/// episode ends on reaching the true goal or after T_max steps. Planning or
/// update errors end it as a failure with the error recorded.
pub fn run_episode(
    world: &World,
    instance: &ProblemInstance,
    method: Method,
    config: &EpisodeConfig,
) -> Result<RunResult, ExperimentError> {
    let theta = instance.validate(world)?;
    let (mut planner_rng, mut human_rng) = episode_rngs(instance.seed);
    let human = HumanParams {
        gamma_h: instance.gamma_h,
    };
    let goal = instance.true_goal_cell();
    let mut planner = Planner::new(world, config.planner, config.reward)?;
    let mut robot_eval = CostEvaluator::new();
    let mut human_eval = CostEvaluator::new();
    let mut memory = CompliantMemory::default();
    let mut belief = Belief::uniform(
        world,
        world.polytope_of(instance.start),
        instance.goals.clone(),
        method.model(),
    )?;

    let mut result = RunResult {
        map: instance.map.clone(),
        method,
        seed: instance.seed,
        success: false,
        reached_goal: false,
        steps: 0,
        violations: 0,
        trajectory: vec![instance.start],
        crossings: Vec::new(),
        observations: Vec::new(),
        failure: None,
        timing: Timing::default(),
    };
    let mut s = instance.start;
    for t in 0..instance.t_max {
        let outcome = step_once(
            world,
            instance,
            method,
            config,
            &theta,
            &human,
            t,
            s,
            &mut belief,
            &mut planner,
            &mut robot_eval,
            &mut human_eval,
            &mut memory,
            &mut planner_rng,
            &mut human_rng,
            &mut result,
        );
        result.steps = t + 1;
        match outcome {
            Ok(next) => s = next,
            Err(e) => {
                result.failure = Some(e.to_string());
                break;
            }
        }
        result.trajectory.push(s);
        if s == goal {
            result.reached_goal = true;
            break;
        }
    }
    result.success = result.reached_goal && result.violations == 0 && result.failure.is_none();
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn step_once(
    world: &World,
    instance: &ProblemInstance,
    method: Method,
    config: &EpisodeConfig,
    theta: &Preference,
    human: &HumanParams,
    t: u32,
    s: GridPos,
    belief: &mut Belief,
    planner: &mut Planner,
    robot_eval: &mut CostEvaluator,
    human_eval: &mut CostEvaluator,
    memory: &mut CompliantMemory,
    planner_rng: &mut ChaCha8Rng,
    human_rng: &mut ChaCha8Rng,
    result: &mut RunResult,
) -> Result<GridPos, ExperimentError> {
    let mut user = None;
    if t % instance.delta_t == 0 {
        let obs = sample_human_observation(
            human_rng,
            world,
            human_eval,
            s,
            instance.true_goal_cell(),
            theta,
            human,
        )?;
        result.observations.push(ObservationRecord {
            t,
            cell: s,
            heading: obs.heading,
        });
        user = Some(obs.heading);
        memory.observe(obs.heading, t);
        if method.plans() {
            let clock = Instant::now();
            *belief = belief.update(world, robot_eval, s, &obs, human)?;
            result
                .timing
                .update_ms
                .push(clock.elapsed().as_secs_f64() * 1e3);
        }
    }

    let clock = Instant::now();
    let action = match method {
        Method::Compliant => compliant_policy(world, s, memory, t),
        Method::PathPref | Method::GoalOnly | Method::Blended => {
            let planned = planner
                .plan(belief, s, instance.t_max - t, planner_rng)?
                .action;
            Some(if method == Method::Blended {
                blended_policy(
                    world,
                    s,
                    belief.entropy(),
                    planned,
                    user,
                    config.blend_threshold,
                )
            } else {
                planned
            })
        }
    };
    result
        .timing
        .solve_ms
        .push(clock.elapsed().as_secs_f64() * 1e3);

    let Some(a) = action else { return Ok(s) };
    let next = world.apply_action(s, a)?;
    let crossing = world.edge_crossed(s, a)?;
    if !theta.allows(crossing) {
        result.violations += 1;
    }
    if let Some(e) = crossing.edge() {
        result.crossings.push(e);
        if method.plans() {
            *belief = belief.reanchor(world, e.to, Some(e), config.back_edge_weight)?;
        }
    }
    Ok(next)
}
