use serde::{Deserialize, Serialize};

use crate::pathcost::CostEvaluator;
use crate::worldgraph::{CellId, EdgeRef, GridPos, World};

use super::{entropy, likelihood_vector, HumanParams, IntentError, Observation};

/// Which hypothesis space the belief ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceModel {
    /// Goal × preferred exit of the current vertex.
    Joint,
    /// Goal only; costs drop the preference conditioning.
    GoalOnly,
}

/// Posterior over `(goal, exit)` pairs, stored row-major by goal.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief {
    vertex: CellId,
    model: PreferenceModel,
    goals: Vec<GridPos>,
    /// Outgoing edges of `vertex`, or a single `None` for the goal-only model.
    exits: Vec<Option<EdgeRef>>,
    probs: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitProbability {
    pub edge: EdgeRef,
    pub probability: f64,
}

/// Marginals and entropy, as exposed to clients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefSummary {
    pub vertex: CellId,
    pub goals: Vec<GridPos>,
    pub goal_marginal: Vec<f64>,
    pub exit_marginal: Vec<ExitProbability>,
    pub entropy: f64,
}

impl Belief {
    /// Uniform prior over `goals × N(vertex)`.
    pub fn uniform(
        world: &World,
        vertex: CellId,
        goals: Vec<GridPos>,
        model: PreferenceModel,
    ) -> Result<Self, IntentError> {
        let exits = exits_of(world, vertex, model)?;
        let n = goals.len() * exits.len();
        Ok(Self {
            vertex,
            model,
            goals,
            exits,
            probs: vec![1.0 / n as f64; n],
        })
    }

    /// All mass on one `(goal, exit)` pair; `exit` is ignored by the
    /// goal-only model.
    pub fn point_mass(
        world: &World,
        vertex: CellId,
        goals: Vec<GridPos>,
        model: PreferenceModel,
        goal: usize,
        exit: Option<EdgeRef>,
    ) -> Result<Self, IntentError> {
        let mut b = Self::uniform(world, vertex, goals, model)?;
        let ei = match model {
            PreferenceModel::GoalOnly => 0,
            PreferenceModel::Joint => b.exits.iter().position(|e| *e == exit).ok_or_else(|| {
                IntentError::World(crate::worldgraph::WorldError::Preference(format!(
                    "{exit:?} is not an exit of {vertex}"
                )))
            })?,
        };
        b.probs.fill(0.0);
        let n = b.exits.len();
        b.probs[goal * n + ei] = 1.0;
        Ok(b)
    }

    pub fn vertex(&self) -> CellId {
        self.vertex
    }

    pub fn model(&self) -> PreferenceModel {
        self.model
    }

    pub fn goals(&self) -> &[GridPos] {
        &self.goals
    }

    pub fn exits(&self) -> &[Option<EdgeRef>] {
        &self.exits
    }

    /// Joint probabilities, `probs[goal * exits.len() + exit]`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, goal: usize, exit: usize) -> f64 {
        self.probs[goal * self.exits.len() + exit]
    }

    pub fn goal_marginal(&self) -> Vec<f64> {
        self.probs
            .chunks(self.exits.len())
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn exit_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.exits.len()];
        for row in self.probs.chunks(self.exits.len()) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    /// Joint entropy `H(g, p_v)` in nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    pub fn summary(&self) -> BeliefSummary {
        let exit_marginal = self
            .exits
            .iter()
            .zip(self.exit_marginal())
            .filter_map(|(e, probability)| e.map(|edge| ExitProbability { edge, probability }))
            .collect();
        BeliefSummary {
            vertex: self.vertex,
            goals: self.goals.clone(),
            goal_marginal: self.goal_marginal(),
            exit_marginal,
            entropy: self.entropy(),
        }
    }

    /// Bayes update on one heading observed at `s`.
    pub fn update(
        &self,
        world: &World,
        eval: &mut CostEvaluator,
        s: GridPos,
        obs: &Observation,
        params: &HumanParams,
    ) -> Result<Belief, IntentError> {
        let actual = world.polytope_of(s);
        if actual != self.vertex {
            return Err(IntentError::VertexMismatch {
                belief: self.vertex,
                actual,
            });
        }
        let mut weights = Vec::with_capacity(self.probs.len());
        for (gi, &g) in self.goals.iter().enumerate() {
            for (ei, &exit) in self.exits.iter().enumerate() {
                let lik = likelihood_vector(world, eval, s, g, exit, params)?;
                let l = lik
                    .iter()
                    .find(|(a, _)| *a == obs.heading)
                    .map(|(_, p)| *p)
                    .ok_or(IntentError::InadmissibleHeading {
                        from: s,
                        heading: obs.heading,
                    })?;
                weights.push(self.prob(gi, ei) * l);
            }
        }
        let mass: f64 = weights.iter().sum();
        if !(mass >= 1e-300) {
            return Err(IntentError::DegeneratePosterior);
        }
        Ok(Belief {
            probs: weights.into_iter().map(|w| w / mass).collect(),
            ..self.clone()
        })
    }

    /// Moves the belief to `vertex`, keeping the goal marginal and resetting
    /// the preference coordinate to its prior: uniform, except that turning
    /// straight back through `entered_via` is weighted by `back_edge_weight`.
    pub fn reanchor(
        &self,
        world: &World,
        vertex: CellId,
        entered_via: Option<EdgeRef>,
        back_edge_weight: f64,
    ) -> Result<Belief, IntentError> {
        let exits = exits_of(world, vertex, self.model)?;
        let back = entered_via.map(EdgeRef::reversed);
        let raw: Vec<f64> = exits
            .iter()
            .map(|e| {
                if e.is_some() && *e == back {
                    back_edge_weight
                } else {
                    1.0
                }
            })
            .collect();
        let z: f64 = raw.iter().sum();
        let marginal = self.goal_marginal();
        let probs = marginal
            .iter()
            .flat_map(|m| raw.iter().map(move |r| m * r / z))
            .collect();
        Ok(Belief {
            vertex,
            model: self.model,
            goals: self.goals.clone(),
            exits,
            probs,
        })
    }
}

fn exits_of(
    world: &World,
    vertex: CellId,
    model: PreferenceModel,
) -> Result<Vec<Option<EdgeRef>>, IntentError> {
    match model {
        PreferenceModel::GoalOnly => Ok(vec![None]),
        PreferenceModel::Joint => {
            let n = world.graph.neighbors(vertex)?;
            if n.is_empty() {
                return Err(IntentError::IsolatedVertex(vertex));
            }
            Ok(n.iter().copied().map(Some).collect())
        }
    }
}
