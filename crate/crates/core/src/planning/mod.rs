//! Reward model, the POMCP planner and the baseline policies.

mod baselines;
mod oracle;
mod pomcp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baselines::{
    blended_policy, compliant_policy, CompliantMemory, COMPLIANT_HOLD, DEFAULT_BLEND_THRESHOLD,
};
pub use oracle::{value_iteration, ValueTable};
pub use pomcp::{
    PlanOutcome, Planner, PlannerConfig, PreferenceCompletion, RolloutPolicy, SearchNode,
};

use crate::intent::IntentError;
use crate::worldgraph::{Action, CellId, Crossing, EdgeRef, GridPos, World, WorldError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanningError {
    #[error("no valid action from {0}")]
    NoValidAction(GridPos),
    #[error("belief is anchored at {belief} but the robot is in {actual}")]
    VertexMismatch { belief: CellId, actual: CellId },
    #[error("invalid planner configuration: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Intent(#[from] IntentError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardParams {
    #[serde(rename = "R_g")]
    pub goal: f64,
    #[serde(rename = "R_p")]
    pub preferred: f64,
    #[serde(rename = "R_n")]
    pub non_preferred: f64,
    pub discount: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            goal: 50.0,
            preferred: 15.5,
            non_preferred: -18.0,
            discount: 0.95,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), PlanningError> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(PlanningError::Config(format!(
                "discount {} outside (0, 1)",
                self.discount
            )));
        }
        if ![self.goal, self.preferred, self.non_preferred]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(PlanningError::Config(
                "reward constants must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// The three additive parts of a one-step reward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardTerms {
    pub goal: f64,
    pub preference: f64,
    pub action: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.goal + self.preference + self.action
    }
}

/// Preference part of the reward for `crossing` when the source vertex
/// prefers `exit`. `None` drops the term (goal-only model).
#[inline]
pub(crate) fn preference_term(
    crossing: Crossing,
    exit: Option<Option<EdgeRef>>,
    params: &RewardParams,
) -> f64 {
    let Some(exit) = exit else { return 0.0 };
    match crossing {
        Crossing::None => 0.0,
        Crossing::Edge { edge } if Some(edge) == exit => params.preferred,
        Crossing::Edge { .. } | Crossing::Invalid { .. } => params.non_preferred,
    }
}

/// Reward decomposition for taking `a` from `s` towards `goal`, where `exit`
/// is the preferred exit of `s`'s vertex, or `None` for the goal-only model.
pub fn reward_terms(
    world: &World,
    s: GridPos,
    a: Action,
    goal: GridPos,
    exit: Option<Option<EdgeRef>>,
    params: &RewardParams,
) -> Result<RewardTerms, PlanningError> {
    let t = world.apply_action(s, a)?;
    let crossing = world.edge_crossed(s, a)?;
    Ok(RewardTerms {
        goal: if t == goal { params.goal } else { 0.0 },
        preference: preference_term(crossing, exit, params),
        action: -a.length(),
    })
}

pub fn reward(
    world: &World,
    s: GridPos,
    a: Action,
    goal: GridPos,
    exit: Option<Option<EdgeRef>>,
    params: &RewardParams,
) -> Result<f64, PlanningError> {
    reward_terms(world, s, a, goal, exit, params).map(|r| r.total())
}
