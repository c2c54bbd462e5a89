//! Unconstrained and preference-constrained shortest paths on the grid.

mod length;
mod search;

use std::collections::HashMap;

pub use length::PathLength;
pub use search::{AStar, DistanceTable, ExitConstraint, Heuristic};

use crate::worldgraph::{Action, CellId, EdgeRef, GridPos, World, WorldError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathQuery {
    pub start: GridPos,
    pub goal: GridPos,
    pub via: Option<GridPos>,
    pub constraint: Option<ExitConstraint>,
}

impl PathQuery {
    pub fn new(start: GridPos, goal: GridPos) -> Self {
        Self {
            start,
            goal,
            via: None,
            constraint: None,
        }
    }

    pub fn via(mut self, via: GridPos) -> Self {
        self.via = Some(via);
        self
    }

    pub fn constrained(mut self, exit: EdgeRef) -> Self {
        self.constraint = Some(ExitConstraint::new(exit));
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub length: PathLength,
    /// Empty when unreachable.
    pub path: Vec<GridPos>,
    pub edge_sequence: Vec<EdgeRef>,
}

/// Optimal path for `query`; unreachable queries give an infinite length.
pub fn shortest_path(
    world: &World,
    search: &mut AStar,
    query: &PathQuery,
) -> Result<PathResult, WorldError> {
    for p in [Some(query.start), Some(query.goal), query.via]
        .into_iter()
        .flatten()
    {
        if !world.map.is_free(p) {
            return Err(WorldError::InvalidMap(format!("{p} is not a free cell")));
        }
    }
    let legs: Vec<(GridPos, GridPos)> = match query.via {
        Some(o) => vec![(query.start, o), (o, query.goal)],
        None => vec![(query.start, query.goal)],
    };
    let mut length = PathLength::ZERO;
    let mut cells: Vec<usize> = Vec::new();
    let mut leg = Vec::new();
    for (a, b) in legs {
        let l = search.search(
            &world.map,
            &world.transitions,
            &world.distances,
            world.map.index(a),
            world.map.index(b),
            query.constraint.as_ref(),
            Some(&mut leg),
        );
        length = length + l;
        if !length.is_finite() {
            return Ok(PathResult {
                length,
                path: Vec::new(),
                edge_sequence: Vec::new(),
            });
        }
        let skip = usize::from(!cells.is_empty());
        cells.extend(leg.iter().skip(skip));
    }
    let path: Vec<GridPos> = cells.into_iter().map(|i| world.map.pos(i)).collect();
    let edge_sequence = edge_sequence_of(world, &path)?;
    Ok(PathResult {
        length,
        path,
        edge_sequence,
    })
}

/// Edges crossed along `path`, in order; invalid diagonals contribute their
/// (non-graph) edge too.
pub fn edge_sequence_of(world: &World, path: &[GridPos]) -> Result<Vec<EdgeRef>, WorldError> {
    let mut out = Vec::new();
    for w in path.windows(2) {
        let a = Action::between(w[0], w[1]).ok_or_else(|| {
            WorldError::InvalidMap(format!("{} -> {} is not a single step", w[0], w[1]))
        })?;
        out.extend(world.edge_crossed(w[0], a)?.edge());
    }
    Ok(out)
}

/// `C(s, o) = ‖s→o‖ + δ(o, g)`, where a constraint also applies to the
/// first step.
pub fn cost_c(
    world: &World,
    search: &mut AStar,
    s: GridPos,
    o: GridPos,
    g: GridPos,
    exit: Option<EdgeRef>,
) -> Result<PathLength, WorldError> {
    let a = Action::between(s, o)
        .ok_or_else(|| WorldError::InvalidMap(format!("{o} is not a neighbour of {s}")))?;
    let crossing = world.edge_crossed(s, a)?;
    let constraint = exit.map(ExitConstraint::new);
    if constraint.is_some_and(|c| !c.allows(crossing)) {
        return Ok(PathLength::INFINITE);
    }
    let rest = search.search(
        &world.map,
        &world.transitions,
        &world.distances,
        world.map.index(o),
        world.map.index(g),
        constraint.as_ref(),
        None,
    );
    Ok(PathLength::step(a) + rest)
}

/// Evaluates observation costs for the belief update, counting every
/// evaluation and caching constrained distances while the robot stays in
/// one vertex.
#[derive(Clone, Debug, Default)]
pub struct CostEvaluator {
    pub search: AStar,
    vertex: Option<CellId>,
    /// `(goal index, exit, from index) -> δ`.
    cache: HashMap<(usize, EdgeRef, usize), PathLength>,
    /// Number of `C(s, o)` evaluations requested.
    pub evaluations: u64,
}

impl CostEvaluator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forgets cached distances unless `vertex` is the one they belong to.
    pub fn enter(&mut self, vertex: CellId) {
        if self.vertex != Some(vertex) {
            self.cache.clear();
            self.vertex = Some(vertex);
        }
    }

    /// `C(s, s + a)` for goal `g`; `exit = None` drops the preference
    /// conditioning and reads the distance table directly.
    pub fn cost(
        &mut self,
        world: &World,
        s: GridPos,
        a: Action,
        g: GridPos,
        exit: Option<EdgeRef>,
    ) -> PathLength {
        self.evaluations += 1;
        let si = world.map.index(s);
        let Some((oi, crossing)) = world.transitions.get(si, a.index()) else {
            return PathLength::INFINITE;
        };
        let gi = world.map.index(g);
        let Some(exit) = exit else {
            return PathLength::step(a) + world.distances.get(oi, gi);
        };
        let constraint = ExitConstraint::new(exit);
        if !constraint.allows(crossing) {
            return PathLength::INFINITE;
        }
        self.enter(constraint.vertex);
        let rest = match self.cache.get(&(gi, exit, oi)) {
            Some(&d) => d,
            None => {
                let d = self.search.search(
                    &world.map,
                    &world.transitions,
                    &world.distances,
                    oi,
                    gi,
                    Some(&constraint),
                    None,
                );
                self.cache.insert((gi, exit, oi), d);
                d
            }
        };
        PathLength::step(a) + rest
    }
}
