//! The human observation model and the joint belief over (goal, preferred
//! exit of the current vertex).

mod belief;

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use belief::{Belief, BeliefSummary, ExitProbability, PreferenceModel};

use crate::pathcost::CostEvaluator;
use crate::worldgraph::{Action, CellId, EdgeRef, GridPos, Preference, World, WorldError};

/// Default down-weighting of turning back through the edge just crossed.
pub const DEFAULT_BACK_EDGE_WEIGHT: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntentError {
    #[error("no admissible heading from {0}")]
    NoAdmissibleHeading(GridPos),
    #[error("heading {heading} from {from} is blocked")]
    InadmissibleHeading { from: GridPos, heading: Action },
    #[error("observation posterior has no mass left")]
    DegeneratePosterior,
    #[error("vertex {0} has no neighbours")]
    IsolatedVertex(CellId),
    #[error("belief is anchored at {belief} but the robot is in {actual}")]
    VertexMismatch { belief: CellId, actual: CellId },
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumanParams {
    /// Rationality coefficient; 0 gives a uniformly random human.
    pub gamma_h: f64,
}

impl Default for HumanParams {
    fn default() -> Self {
        Self { gamma_h: 1.5 }
    }
}

/// A heading cue and the neighbouring cell it points at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub heading: Action,
    pub intended_cell: GridPos,
}

impl Observation {
    pub fn new(s: GridPos, heading: Action) -> Self {
        Self {
            heading,
            intended_cell: s.offset(heading),
        }
    }
}

/// Compass direction nearest to `angle` (radians, counter-clockwise from
/// East); exact ties go to the smaller angle.
pub fn snap_heading(angle: f64) -> Action {
    let k = (angle / FRAC_PI_4 - 0.5).ceil();
    Action::from_index(k.rem_euclid(8.0) as usize)
}

/// Observation for a heading angle, rejected when it points into an
/// obstacle or off the map.
pub fn heading_to_cell(world: &World, s: GridPos, angle: f64) -> Result<Observation, IntentError> {
    let heading = snap_heading(angle);
    let obs = Observation::new(s, heading);
    if world.map.is_free(s) && world.map.is_free(obs.intended_cell) {
        Ok(obs)
    } else {
        Err(IntentError::InadmissibleHeading { from: s, heading })
    }
}

/// Admissible headings from `s`: the free 8-neighbours.
pub fn admissible(world: &World, s: GridPos) -> Vec<Action> {
    world.map.valid_actions(s).collect()
}

/// `exp(-γ·c) / Σ exp(-γ·c')`, shifted by the smallest cost. All-infinite
/// costs give the uniform distribution.
pub fn boltzmann(costs: &[f64], gamma: f64) -> Vec<f64> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return vec![1.0 / costs.len() as f64; costs.len()];
    }
    let w: Vec<f64> = costs
        .iter()
        .map(|&c| {
            if c.is_finite() {
                (-gamma * (c - min)).exp()
            } else {
                0.0
            }
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Probability of every admissible heading from `s` for goal `g` and the
/// preferred exit `exit` of the current vertex (`None`: goal only).
pub fn likelihood_vector(
    world: &World,
    eval: &mut CostEvaluator,
    s: GridPos,
    g: GridPos,
    exit: Option<EdgeRef>,
    params: &HumanParams,
) -> Result<Vec<(Action, f64)>, IntentError> {
    let actions = admissible(world, s);
    if actions.is_empty() {
        return Err(IntentError::NoAdmissibleHeading(s));
    }
    let costs: Vec<f64> = actions
        .iter()
        .map(|&a| eval.cost(world, s, a, g, exit).value())
        .collect();
    Ok(actions
        .into_iter()
        .zip(boltzmann(&costs, params.gamma_h))
        .collect())
}

pub fn observation_likelihood(
    world: &World,
    eval: &mut CostEvaluator,
    s: GridPos,
    g: GridPos,
    exit: Option<EdgeRef>,
    obs: &Observation,
    params: &HumanParams,
) -> Result<f64, IntentError> {
    let v = likelihood_vector(world, eval, s, g, exit, params)?;
    v.iter()
        .find(|(a, _)| *a == obs.heading)
        .map(|(_, p)| *p)
        .ok_or(IntentError::InadmissibleHeading {
            from: s,
            heading: obs.heading,
        })
}

/// Draws a heading from the same model the belief update inverts, using the
/// ground-truth goal and preference.
pub fn sample_human_observation<R: Rng + ?Sized>(
    rng: &mut R,
    world: &World,
    eval: &mut CostEvaluator,
    s: GridPos,
    goal: GridPos,
    preference: &Preference,
    params: &HumanParams,
) -> Result<Observation, IntentError> {
    let exit = preference.exit(world.polytope_of(s));
    let probs = likelihood_vector(world, eval, s, goal, exit, params)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(a, p) in &probs {
        acc += p;
        if u < acc {
            return Ok(Observation::new(s, a));
        }
    }
    let last = probs
        .iter()
        .rev()
        .find(|(_, p)| *p > 0.0)
        .expect("normalized");
    Ok(Observation::new(s, last.0))
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}
