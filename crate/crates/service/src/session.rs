//! One live episode driven by a human: headings come from the client and
//! steps happen when the client asks for them.

use std::sync::Arc;
use std::time::Instant;

use prefnav_core::experiments::{EpisodeConfig, Method, ProblemInstance};
use prefnav_core::intent::{heading_to_cell, Belief, BeliefSummary, HumanParams};
use prefnav_core::pathcost::CostEvaluator;
use prefnav_core::planning::{
    blended_policy, compliant_policy, CompliantMemory, Planner, PlannerConfig, RewardParams,
};
use prefnav_core::worldgraph::{Action, EdgeRef, GridPos, Preference, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub start: Option<GridPos>,
    pub goals: Option<Vec<GridPos>>,
    pub true_goal: Option<usize>,
    #[serde(rename = "T_max")]
    pub t_max: Option<u32>,
    pub gamma_h: Option<f64>,
    pub planner: Option<PlannerConfig>,
    pub reward: Option<RewardParams>,
    /// Step automatically every this many milliseconds.
    pub auto_step_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub map_id: String,
    pub method: Method,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Succeeded,
    Failed,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadingEvent {
    pub seq: u64,
    /// Step counter at the time the heading arrived.
    pub step: u32,
    pub angle: f64,
    pub heading: Action,
    pub cell: GridPos,
    pub belief: BeliefSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub seq: u64,
    /// Step counter after the step.
    pub step: u32,
    /// `None` when the robot stood still.
    pub action: Option<Action>,
    pub from: GridPos,
    pub to: GridPos,
    pub crossing: Option<EdgeRef>,
    pub violation: bool,
    pub belief: BeliefSummary,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Heading(HeadingEvent),
    Step(StepEvent),
}

impl SessionEvent {
    pub fn seq(&self) -> u64 {
        match self {
            SessionEvent::Heading(e) => e.seq,
            SessionEvent::Step(e) => e.seq,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, SessionEvent::Step(e) if e.status.is_terminal())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LastTiming {
    pub plan_ms: Option<f64>,
    pub update_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub map_id: String,
    pub method: Method,
    pub seed: u64,
    pub status: Status,
    pub step: u32,
    #[serde(rename = "T_max")]
    pub t_max: u32,
    pub location: GridPos,
    pub trajectory: Vec<GridPos>,
    pub crossings: Vec<EdgeRef>,
    pub violations: u32,
    pub belief: BeliefSummary,
    pub events: usize,
    pub timing: LastTiming,
}

pub struct Session {
    pub id: String,
    world: Arc<World>,
    request: CreateSession,
    instance: ProblemInstance,
    theta: Preference,
    config: EpisodeConfig,
    human: HumanParams,
    belief: Belief,
    eval: CostEvaluator,
    rng: ChaCha8Rng,
    memory: CompliantMemory,
    pending: Option<Action>,
    location: GridPos,
    trajectory: Vec<GridPos>,
    crossings: Vec<EdgeRef>,
    violations: u32,
    step: u32,
    status: Status,
    log: Vec<SessionEvent>,
    timing: LastTiming,
}

impl Session {
    /// Builds a session; `request.overrides.seed` must already be set.
    pub fn new(id: String, world: Arc<World>, request: CreateSession) -> Result<Self, ApiError> {
        let o = &request.overrides;
        let seed = o
            .seed
            .ok_or_else(|| ApiError::Invalid("missing seed".into()))?;
        let mut instance = ProblemInstance::from_world(&world, seed);
        if let Some(s) = o.start {
            instance.start = s;
        }
        if let Some(g) = &o.goals {
            instance.goals = g.clone();
            if o.true_goal.is_none() && instance.true_goal >= g.len() {
                instance.true_goal = 0;
            }
        }
        if let Some(i) = o.true_goal {
            instance.true_goal = i;
        }
        if let Some(t) = o.t_max {
            instance.t_max = t;
        }
        if let Some(g) = o.gamma_h {
            instance.gamma_h = g;
        }
        if o.auto_step_ms == Some(0) {
            return Err(ApiError::Invalid("auto_step_ms must be positive".into()));
        }
        let mut config = EpisodeConfig::default();
        if let Some(p) = o.planner {
            config.planner = p;
        }
        if let Some(r) = o.reward {
            config.reward = r;
        }
        config
            .planner
            .validate()
            .map_err(|e| ApiError::Invalid(e.to_string()))?;
        config
            .reward
            .validate()
            .map_err(|e| ApiError::Invalid(e.to_string()))?;
        let theta = instance
            .validate(&world)
            .map_err(|e| ApiError::Invalid(e.to_string()))?;
        let belief = Belief::uniform(
            &world,
            world.polytope_of(instance.start),
            instance.goals.clone(),
            request.method.model(),
        )
        .map_err(|e| ApiError::Invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(Self {
            id,
            human: HumanParams {
                gamma_h: instance.gamma_h,
            },
            location: instance.start,
            trajectory: vec![instance.start],
            world,
            request,
            theta,
            config,
            belief,
            eval: CostEvaluator::new(),
            rng,
            memory: CompliantMemory::default(),
            pending: None,
            crossings: Vec::new(),
            violations: 0,
            step: 0,
            status: Status::Running,
            log: Vec::new(),
            timing: LastTiming::default(),
            instance,
        })
    }

    pub fn request(&self) -> &CreateSession {
        &self.request
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn world(&self) -> &Arc<World> {
        &self.world
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn log(&self) -> &[SessionEvent] {
        &self.log
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            id: self.id.clone(),
            map_id: self.instance.map.clone(),
            method: self.request.method,
            seed: self.instance.seed,
            status: self.status,
            step: self.step,
            t_max: self.instance.t_max,
            location: self.location,
            trajectory: self.trajectory.clone(),
            crossings: self.crossings.clone(),
            violations: self.violations,
            belief: self.belief.summary(),
            events: self.log.len(),
            timing: self.timing.clone(),
        }
    }

    fn ensure_running(&self) -> Result<(), ApiError> {
        if self.status.is_terminal() {
            return Err(ApiError::Conflict(format!(
                "session {} is {:?}",
                self.id, self.status
            )));
        }
        Ok(())
    }

    /// Snaps `angle` to a grid move and conditions the belief on it. A
    /// rejected heading leaves the session untouched.
    pub fn post_heading(&mut self, angle: f64) -> Result<HeadingEvent, ApiError> {
        self.ensure_running()?;
        if !angle.is_finite() {
            return Err(ApiError::Invalid("angle must be finite".into()));
        }
        let s = self.location;
        let obs = heading_to_cell(&self.world, s, angle)
            .map_err(|e| ApiError::Rejected(e.to_string()))?;
        let clock = Instant::now();
        let belief = self
            .belief
            .update(&self.world, &mut self.eval, s, &obs, &self.human)
            .map_err(|e| ApiError::Rejected(e.to_string()))?;
        self.timing.update_ms = Some(clock.elapsed().as_secs_f64() * 1e3);
        self.belief = belief;
        self.memory.observe(obs.heading, self.step);
        self.pending = Some(obs.heading);
        let event = HeadingEvent {
            seq: self.log.len() as u64,
            step: self.step,
            angle,
            heading: obs.heading,
            cell: s,
            belief: self.belief.summary(),
        };
        self.log.push(SessionEvent::Heading(event.clone()));
        Ok(event)
    }

    /// Chooses and applies one action.
    pub fn step(&mut self) -> Result<StepEvent, ApiError> {
        self.ensure_running()?;
        let s = self.location;
        let t = self.step;
        let method = self.request.method;
        let clock = Instant::now();
        let action = match method {
            Method::Compliant => compliant_policy(&self.world, s, &self.memory, t),
            Method::PathPref | Method::GoalOnly | Method::Blended => {
                let mut planner =
                    Planner::new(&self.world, self.config.planner, self.config.reward)
                        .map_err(|e| ApiError::Internal(e.to_string()))?;
                let planned = planner
                    .plan(&self.belief, s, self.instance.t_max - t, &mut self.rng)
                    .map_err(|e| ApiError::Internal(e.to_string()))?
                    .action;
                Some(if method == Method::Blended {
                    let entropy = self.belief.entropy();
                    blended_policy(
                        &self.world,
                        s,
                        entropy,
                        planned,
                        self.pending,
                        self.config.blend_threshold,
                    )
                } else {
                    planned
                })
            }
        };
        self.timing.plan_ms = Some(clock.elapsed().as_secs_f64() * 1e3);

        let mut next = s;
        let mut crossing = None;
        let mut violation = false;
        if let Some(a) = action {
            next = self
                .world
                .apply_action(s, a)
                .map_err(|e| ApiError::Internal(e.to_string()))?;
            let c = self
                .world
                .edge_crossed(s, a)
                .map_err(|e| ApiError::Internal(e.to_string()))?;
            violation = !self.theta.allows(c);
            if let Some(e) = c.edge() {
                crossing = Some(e);
                self.crossings.push(e);
                self.belief = self
                    .belief
                    .reanchor(&self.world, e.to, Some(e), self.config.back_edge_weight)
                    .map_err(|e| ApiError::Internal(e.to_string()))?;
            }
        }
        self.pending = None;
        self.violations += violation as u32;
        self.location = next;
        self.trajectory.push(next);
        self.step += 1;
        if next == self.instance.true_goal_cell() {
            self.status = if self.violations == 0 {
                Status::Succeeded
            } else {
                Status::Failed
            };
        } else if self.step >= self.instance.t_max {
            self.status = Status::Failed;
        }
        let event = StepEvent {
            seq: self.log.len() as u64,
            step: self.step,
            action,
            from: s,
            to: next,
            crossing,
            violation,
            belief: self.belief.summary(),
            status: self.status,
        };
        self.log.push(SessionEvent::Step(event.clone()));
        Ok(event)
    }

    /// Re-runs the inputs recorded in `log` on a fresh session.
    pub fn replay(
        id: String,
        world: Arc<World>,
        request: CreateSession,
        log: &[SessionEvent],
    ) -> Result<Self, ApiError> {
        let mut session = Session::new(id, world, request)?;
        for event in log {
            match event {
                SessionEvent::Heading(h) => {
                    session.post_heading(h.angle)?;
                }
                SessionEvent::Step(_) => {
                    session.step()?;
                }
            }
        }
        Ok(session)
    }
}

/// Rebuilds the observable state from a creation summary and an event log.
pub fn fold_events(initial: &Snapshot, log: &[SessionEvent]) -> Snapshot {
    let mut snap = initial.clone();
    for event in log {
        match event {
            SessionEvent::Heading(h) => snap.belief = h.belief.clone(),
            SessionEvent::Step(e) => {
                snap.step = e.step;
                snap.location = e.to;
                snap.trajectory.push(e.to);
                snap.crossings.extend(e.crossing);
                snap.violations += e.violation as u32;
                snap.belief = e.belief.clone();
                snap.status = e.status;
            }
        }
        snap.events += 1;
    }
    snap
}
