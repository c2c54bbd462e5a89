use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::intent::{Belief, PreferenceModel, DEFAULT_BACK_EDGE_WEIGHT};
use crate::pathcost::ExitConstraint;
use crate::pathcost::PathLength;
use crate::worldgraph::{Action, CellId, Crossing, EdgeRef, GridPos, Preference, World};

use super::{preference_term, PlanningError, RewardParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RolloutPolicy {
    /// Step down the unconstrained distance to the particle's goal, taking a
    /// uniformly random valid action with probability `epsilon`.
    Greedy {
        epsilon: f64,
    },
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub iterations: u32,
    /// Upper bound on the search depth; the episode caps it further at the
    /// remaining mission time.
    pub max_depth: u32,
    pub exploration: f64,
    pub rollout: RolloutPolicy,
    /// Prior weight of turning straight back when a preference is sampled
    /// for a vertex first entered during a simulation.
    pub back_edge_weight: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            max_depth: 60,
            exploration: 50.0,
            rollout: RolloutPolicy::Greedy { epsilon: 0.1 },
            back_edge_weight: DEFAULT_BACK_EDGE_WEIGHT,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanningError> {
        let bad = |m: &str| Err(PlanningError::Config(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if !(self.exploration >= 0.0 && self.exploration.is_finite()) {
            return bad("exploration constant must be finite and nonnegative");
        }
        if !(self.back_edge_weight >= 0.0 && self.back_edge_weight.is_finite()) {
            return bad("back_edge_weight must be finite and nonnegative");
        }
        if let RolloutPolicy::Greedy { epsilon } = self.rollout {
            if !(0.0..=1.0).contains(&epsilon) {
                return bad("rollout epsilon must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

/// How preferences of vertices other than the belief's anchor are filled in
/// during simulation.
#[derive(Clone, Debug, PartialEq)]
pub enum PreferenceCompletion {
    /// Drawn on first entry from the reanchoring prior.
    Sampled,
    /// Read from a fully known θ.
    Known(Preference),
}

/// One node of the action-only search tree. The robot's location is a
/// deterministic function of the action sequence, so it is stored here.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchNode {
    pub location: GridPos,
    pub visits: u32,
    pub counts: [u32; 8],
    pub values: [f64; 8],
    /// Index into the tree, `None` until the action is expanded.
    pub children: [Option<u32>; 8],
}

impl SearchNode {
    fn new(location: GridPos) -> Self {
        Self {
            location,
            visits: 0,
            counts: [0; 8],
            values: [0.0; 8],
            children: [None; 8],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanOutcome {
    pub action: Action,
    /// Root action values, `None` for invalid or unvisited actions.
    pub q: [Option<f64>; 8],
    pub counts: [u32; 8],
    pub tree_size: usize,
}

#[derive(Clone, Copy)]
struct Particle {
    goal: usize,
    goal_idx: usize,
}

pub struct Planner<'w> {
    world: &'w World,
    pub config: PlannerConfig,
    pub params: RewardParams,
    completion: PreferenceCompletion,
    valid: Vec<Vec<u8>>,
    greedy: HashMap<GridPos, Vec<u8>>,
    /// Greedy tables that also respect a preferred exit, keyed by goal cell
    /// index and exit.
    constrained: HashMap<(usize, EdgeRef), Vec<u8>>,
    root_vertex: Option<CellId>,
    tree: Vec<SearchNode>,
    /// Per-simulation lazily sampled preferences, valid when the stamp matches.
    pref_stamp: Vec<u32>,
    pref: Vec<Option<EdgeRef>>,
    stamp: u32,
    goal_only: bool,
}

impl<'w> Planner<'w> {
    pub fn new(
        world: &'w World,
        config: PlannerConfig,
        params: RewardParams,
    ) -> Result<Self, PlanningError> {
        config.validate()?;
        params.validate()?;
        let valid = (0..world.map.num_cells())
            .map(|i| {
                (0..8u8)
                    .filter(|&k| world.transitions.get(i, k as usize).is_some())
                    .collect()
            })
            .collect();
        let n = world.arrangement.cells().len();
        Ok(Self {
            world,
            config,
            params,
            completion: PreferenceCompletion::Sampled,
            valid,
            greedy: HashMap::new(),
            constrained: HashMap::new(),
            root_vertex: None,
            tree: Vec::new(),
            pref_stamp: vec![0; n],
            pref: vec![None; n],
            stamp: 0,
            goal_only: false,
        })
    }

    pub fn with_completion(mut self, completion: PreferenceCompletion) -> Self {
        self.completion = completion;
        self
    }

    /// Tree built by the last call to [`Planner::plan`].
    pub fn tree(&self) -> &[SearchNode] {
        &self.tree
    }

    /// Runs the configured number of simulations from `s` and returns the
    /// root action with the highest value (smallest index on ties).
    ///
    /// A goal-only belief drops the preference reward entirely.
    pub fn plan<R: Rng + ?Sized>(
        &mut self,
        belief: &Belief,
        s: GridPos,
        depth: u32,
        rng: &mut R,
    ) -> Result<PlanOutcome, PlanningError> {
        let world = self.world;
        let actual = world.polytope_of(s);
        if belief.vertex() != actual {
            return Err(PlanningError::VertexMismatch {
                belief: belief.vertex(),
                actual,
            });
        }
        let root_idx = world.map.index(s);
        if !world.map.is_free(s) || self.valid[root_idx].is_empty() {
            return Err(PlanningError::NoValidAction(s));
        }
        let depth = depth.min(self.config.max_depth).max(1);
        self.goal_only = belief.model() == PreferenceModel::GoalOnly;
        self.root_vertex = Some(belief.vertex());
        for &g in belief.goals() {
            self.greedy_table(g);
        }
        let goal_idx: Vec<usize> = belief.goals().iter().map(|&g| world.map.index(g)).collect();
        let n_exits = belief.exits().len();
        // a goal the robot is standing on has been ruled out
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(belief.probs().len());
        for (j, p) in belief.probs().iter().enumerate() {
            if goal_idx[j / n_exits] != root_idx {
                acc += p;
            }
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            acc = 0.0;
            cdf.clear();
            for p in belief.probs() {
                acc += p;
                cdf.push(acc);
            }
        }

        self.tree.clear();
        self.tree.push(SearchNode::new(s));
        for _ in 0..self.config.iterations {
            let u = rng.gen::<f64>() * acc;
            let j = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let (gi, ei) = (j / n_exits, j % n_exits);
            self.begin_simulation(belief.vertex(), belief.exits()[ei]);
            let particle = Particle {
                goal: gi,
                goal_idx: goal_idx[gi],
            };
            self.simulate(particle, belief.goals(), root_idx, depth, rng);
        }

        let root = &self.tree[0];
        let mut q = [None; 8];
        let mut best: Option<(usize, f64)> = None;
        for &k in &self.valid[root_idx] {
            let k = k as usize;
            if root.counts[k] == 0 {
                continue;
            }
            q[k] = Some(root.values[k]);
            if best.map_or(true, |(_, v)| root.values[k] > v) {
                best = Some((k, root.values[k]));
            }
        }
        let (k, _) = best.expect("at least one simulation");
        Ok(PlanOutcome {
            action: Action::from_index(k),
            q,
            counts: root.counts,
            tree_size: self.tree.len(),
        })
    }

    fn begin_simulation(&mut self, root: CellId, exit: Option<EdgeRef>) {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.pref_stamp.fill(0);
            self.stamp = 1;
        }
        self.pref_stamp[root.index()] = self.stamp;
        self.pref[root.index()] = exit;
    }

    /// Preferred exit of the source vertex of `crossing`, sampling the
    /// vertex it enters if that one has not been seen in this simulation.
    fn crossing_reward<R: Rng + ?Sized>(&mut self, crossing: Crossing, rng: &mut R) -> f64 {
        if self.goal_only {
            return 0.0;
        }
        let Some(edge) = crossing.edge() else {
            return 0.0;
        };
        let exit = self.exit_of(edge.from, None, rng);
        let r = preference_term(crossing, Some(exit), &self.params);
        // fill the entered vertex on first entry
        let back = match crossing {
            Crossing::Edge { edge } => Some(edge.reversed()),
            _ => None,
        };
        self.exit_of(edge.to, back, rng);
        r
    }

    fn exit_of<R: Rng + ?Sized>(
        &mut self,
        v: CellId,
        back: Option<EdgeRef>,
        rng: &mut R,
    ) -> Option<EdgeRef> {
        let i = v.index();
        if self.pref_stamp[i] == self.stamp {
            return self.pref[i];
        }
        let exit = match &self.completion {
            PreferenceCompletion::Known(theta) => theta.exit(v),
            PreferenceCompletion::Sampled => {
                let nbrs = self.world.graph.neighbors(v).unwrap_or(&[]);
                let weight = |e: &EdgeRef| {
                    if Some(*e) == back {
                        self.config.back_edge_weight
                    } else {
                        1.0
                    }
                };
                let total: f64 = nbrs.iter().map(weight).sum();
                if total > 0.0 {
                    let mut u = rng.gen::<f64>() * total;
                    let mut pick = nbrs.last().copied();
                    for e in nbrs {
                        let w = weight(e);
                        if u < w {
                            pick = Some(*e);
                            break;
                        }
                        u -= w;
                    }
                    pick
                } else {
                    nbrs.first().copied()
                }
            }
        };
        self.pref_stamp[i] = self.stamp;
        self.pref[i] = exit;
        exit
    }

    fn simulate<R: Rng + ?Sized>(
        &mut self,
        particle: Particle,
        goals: &[GridPos],
        root_idx: usize,
        depth: u32,
        rng: &mut R,
    ) {
        let world = self.world;
        let gamma = self.params.discount;
        let mut path: Vec<(u32, usize, f64)> = Vec::with_capacity(depth as usize);
        let mut node = 0u32;
        let mut s = root_idx;
        let mut d = 0;
        let mut tail = 0.0;
        while d < depth {
            let k = self.select(node, s);
            let (t, crossing) = world.transitions.get(s, k).expect("valid action");
            let mut r = -Action::from_index(k).length() + self.crossing_reward(crossing, rng);
            let reached = t == particle.goal_idx;
            if reached {
                r += self.params.goal;
            }
            path.push((node, k, r));
            d += 1;
            if reached || d == depth {
                break;
            }
            s = t;
            match self.tree[node as usize].children[k] {
                Some(c) => node = c,
                None => {
                    let c = self.tree.len() as u32;
                    self.tree.push(SearchNode::new(world.map.pos(t)));
                    self.tree[node as usize].children[k] = Some(c);
                    tail = self.rollout(particle, goals, t, depth - d, rng);
                    break;
                }
            }
        }
        let mut ret = tail;
        for &(n, k, r) in path.iter().rev() {
            ret = r + gamma * ret;
            let node = &mut self.tree[n as usize];
            node.visits += 1;
            node.counts[k] += 1;
            node.values[k] += (ret - node.values[k]) / node.counts[k] as f64;
        }
    }

    fn select(&self, node: u32, s: usize) -> usize {
        let n = &self.tree[node as usize];
        let valid = &self.valid[s];
        if let Some(&k) = valid.iter().find(|&&k| n.counts[k as usize] == 0) {
            return k as usize;
        }
        let ln_n = (n.visits as f64).ln();
        let c = self.config.exploration;
        let mut best = (valid[0] as usize, f64::NEG_INFINITY);
        for &k in valid {
            let k = k as usize;
            let score = n.values[k] + c * (ln_n / n.counts[k] as f64).sqrt();
            if score > best.1 {
                best = (k, score);
            }
        }
        best.0
    }

    fn rollout<R: Rng + ?Sized>(
        &mut self,
        particle: Particle,
        goals: &[GridPos],
        mut s: usize,
        steps: u32,
        rng: &mut R,
    ) -> f64 {
        let world = self.world;
        let gamma = self.params.discount;
        let mut ret = 0.0;
        let mut discount = 1.0;
        for _ in 0..steps {
            let n_valid = self.valid[s].len();
            if n_valid == 0 {
                break;
            }
            let greedy = match self.config.rollout {
                RolloutPolicy::Greedy { epsilon } if rng.gen::<f64>() >= epsilon => {
                    self.greedy_action(particle, goals[particle.goal], s)
                }
                _ => u8::MAX,
            };
            let k = match greedy {
                u8::MAX => self.valid[s][rng.gen_range(0..n_valid)],
                k => k,
            } as usize;
            let (t, crossing) = world.transitions.get(s, k).expect("valid action");
            let mut r = -Action::from_index(k).length() + self.crossing_reward(crossing, rng);
            if t == particle.goal_idx {
                r += self.params.goal;
            }
            ret += discount * r;
            discount *= gamma;
            if t == particle.goal_idx {
                break;
            }
            s = t;
        }
        ret
    }

    /// Greedy rollout step. Where the robot knows the preferred exit of the
    /// current vertex (the belief's anchor, or anywhere under a known θ) the
    /// step also honours that exit.
    fn greedy_action(&mut self, particle: Particle, goal: GridPos, s: usize) -> u8 {
        if !self.goal_only {
            let v = self.world.map.cell_to_polytope[s];
            let known = match self.completion {
                PreferenceCompletion::Known(_) => true,
                PreferenceCompletion::Sampled => Some(v) == self.root_vertex,
            };
            if known && self.pref_stamp[v.index()] == self.stamp {
                if let Some(exit) = self.pref[v.index()] {
                    return self.constrained_table(particle.goal_idx, exit)[s];
                }
            }
        }
        self.greedy[&goal][s]
    }

    fn constrained_table(&mut self, goal: usize, exit: EdgeRef) -> &[u8] {
        if !self.constrained.contains_key(&(goal, exit)) {
            let table = self.build_constrained(goal, exit);
            self.constrained.insert((goal, exit), table);
        }
        &self.constrained[&(goal, exit)]
    }

    /// Backward Dijkstra from `goal` over moves allowed by the exit
    /// constraint, then the best first move from every cell.
    fn build_constrained(&self, goal: usize, exit: EdgeRef) -> Vec<u8> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        let world = self.world;
        let c = ExitConstraint::new(exit);
        let n = world.map.num_cells();
        let mut dist = vec![PathLength::INFINITE; n];
        dist[goal] = PathLength::ZERO;
        let mut heap = BinaryHeap::from([Reverse((PathLength::ZERO, goal))]);
        while let Some(Reverse((d, t))) = heap.pop() {
            if d > dist[t] {
                continue;
            }
            // predecessors: every u with a move u -> t, found through the reverse move
            for &k in &self.valid[t] {
                let (u, _) = world.transitions.get(t, k as usize).expect("valid");
                let back = (k as usize + 4) % 8;
                let (_, crossing) = world
                    .transitions
                    .get(u, back)
                    .expect("moves are reversible");
                if !c.allows(crossing) {
                    continue;
                }
                let nd = d + PathLength::step(Action::from_index(back));
                if nd < dist[u] {
                    dist[u] = nd;
                    heap.push(Reverse((nd, u)));
                }
            }
        }
        (0..n)
            .map(|s| {
                let mut best: Option<(PathLength, u8)> = None;
                for &k in &self.valid[s] {
                    let (t, crossing) = world.transitions.get(s, k as usize).expect("valid");
                    if !c.allows(crossing) {
                        continue;
                    }
                    let d = PathLength::step(Action::from_index(k as usize)) + dist[t];
                    if d.is_finite() && best.map_or(true, |(b, _)| d < b) {
                        best = Some((d, k));
                    }
                }
                best.map_or(u8::MAX, |(_, k)| k)
            })
            .collect()
    }

    /// Greedy next action towards `g` for every cell, `u8::MAX` where none
    /// makes progress.
    fn greedy_table(&mut self, g: GridPos) {
        if self.greedy.contains_key(&g) {
            return;
        }
        let world = self.world;
        let gi = world.map.index(g);
        let table = (0..world.map.num_cells())
            .map(|s| {
                let mut best: Option<(PathLength, u8)> = None;
                for &k in &self.valid[s] {
                    let (t, _) = world.transitions.get(s, k as usize).expect("valid");
                    let d = PathLength::step(Action::from_index(k as usize))
                        + world.distances.get(t, gi);
                    if d.is_finite() && best.map_or(true, |(b, _)| d < b) {
                        best = Some((d, k));
                    }
                }
                best.map_or(u8::MAX, |(_, k)| k)
            })
            .collect();
        self.greedy.insert(g, table);
    }
}

impl std::fmt::Debug for Planner<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Planner")
            .field("world", &self.world.name)
            .field("config", &self.config)
            .field("params", &self.params)
            .finish()
    }
}
