//! Grid worlds on top of the arrangement: map loading, the polytope graph,
//! and which graph edge (if any) each grid move crosses.

mod document;
mod graph;
mod grid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::geometry::CellId;
use crate::geometry::{Arrangement, GeometryError};
use crate::pathcost::DistanceTable;

pub use document::{load_map, MapDocument, ObstacleDoc, PreferenceMode, PreferenceSpec};
pub use graph::{build_graph, EdgeRef, GraphEdge, PolytopeGraph};
pub use grid::{Action, GridMap, GridPos};

/// Maps shipped with the crate, by name.
pub const BUNDLED_MAPS: [(&str, &str); 3] = [
    ("map1", include_str!("../../maps/map1.json")),
    ("office", include_str!("../../maps/office.json")),
    ("classroom", include_str!("../../maps/classroom.json")),
];

/// Loads one of [`BUNDLED_MAPS`].
pub fn load_bundled(name: &str) -> Result<World, WorldError> {
    let (_, text) = BUNDLED_MAPS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| WorldError::UnknownMap(name.to_string()))?;
    load_map(name, text.as_bytes())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("unknown map {0:?}")]
    UnknownMap(String),
    #[error("map document: {0}")]
    Schema(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("start {0} is not a free cell")]
    StartBlocked(GridPos),
    #[error("goal candidate {index} at {pos} is not a free cell")]
    GoalBlocked { index: usize, pos: GridPos },
    #[error("center of {pos} is within 1e-6 of hyperplane {hyperplane}")]
    CenterOnHyperplane { pos: GridPos, hyperplane: usize },
    #[error("unknown vertex {0}")]
    UnknownVertex(CellId),
    #[error("unknown vertex key {0:?}")]
    UnknownVertexKey(String),
    #[error("invalid preference: {0}")]
    Preference(String),
    #[error("action {action} from {from} leaves the free space")]
    InvalidAction { from: GridPos, action: Action },
}

/// What a single grid move does in the polytope graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Crossing {
    None,
    Edge {
        edge: EdgeRef,
    },
    /// A diagonal that cuts between two polytopes that share no facet.
    Invalid {
        edge: EdgeRef,
    },
}

impl Crossing {
    pub fn edge(self) -> Option<EdgeRef> {
        match self {
            Crossing::None => None,
            Crossing::Edge { edge } | Crossing::Invalid { edge } => Some(edge),
        }
    }

    pub fn is_none(self) -> bool {
        matches!(self, Crossing::None)
    }

    pub fn is_invalid(self) -> bool {
        matches!(self, Crossing::Invalid { .. })
    }
}

/// Ground-truth preferred exit of every vertex (θ).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preference {
    /// Indexed by cell id.
    exits: Vec<Option<EdgeRef>>,
}

impl Preference {
    /// Checks that every vertex with neighbours has exactly one exit, and that
    /// each exit is an outgoing edge of its vertex.
    pub fn new(graph: &PolytopeGraph, exits: Vec<Option<EdgeRef>>) -> Result<Self, WorldError> {
        for &v in graph.vertices() {
            let nbrs = graph.neighbors(v)?;
            match exits.get(v.index()).copied().flatten() {
                Some(e) if !nbrs.contains(&e) => {
                    return Err(WorldError::Preference(format!("{e} is not an exit of {v}")))
                }
                None if !nbrs.is_empty() => {
                    return Err(WorldError::Preference(format!(
                        "vertex {v} has no preferred exit"
                    )))
                }
                _ => {}
            }
        }
        Ok(Self { exits })
    }

    pub fn exit(&self, v: CellId) -> Option<EdgeRef> {
        self.exits.get(v.index()).copied().flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeRef> + '_ {
        self.exits.iter().flatten().copied()
    }

    /// Whether crossing `c` out of its source vertex agrees with θ.
    pub fn allows(&self, c: Crossing) -> bool {
        match c {
            Crossing::None => true,
            Crossing::Edge { edge } => self.exit(edge.from) == Some(edge),
            Crossing::Invalid { .. } => false,
        }
    }
}

/// Episode parameters carried by a map document.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub true_goal_index: usize,
    pub preference: Preference,
    pub t_max: u32,
    pub delta_t: u32,
    pub gamma_h: f64,
}

/// Precomputed outcome of every (free cell, action) pair.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    /// `entries[8 * cell + action]`.
    entries: Vec<Option<(u32, Crossing)>>,
}

impl TransitionTable {
    pub fn build(map: &GridMap, graph: &PolytopeGraph) -> Self {
        let mut entries = vec![None; map.num_cells() * 8];
        for s in map.free_cells() {
            let from = map.polytope_of(s);
            for (k, a) in Action::ALL.into_iter().enumerate() {
                let t = s.offset(a);
                if !map.is_free(t) {
                    continue;
                }
                let to = map.polytope_of(t);
                let crossing = if from == to {
                    Crossing::None
                } else if graph.is_edge(EdgeRef::new(from, to)) {
                    Crossing::Edge {
                        edge: EdgeRef::new(from, to),
                    }
                } else {
                    Crossing::Invalid {
                        edge: EdgeRef::new(from, to),
                    }
                };
                entries[map.index(s) * 8 + k] = Some((map.index(t) as u32, crossing));
            }
        }
        Self { entries }
    }

    /// Target cell index and crossing of action `k` from cell index `s`.
    #[inline]
    pub fn get(&self, s: usize, k: usize) -> Option<(usize, Crossing)> {
        self.entries[s * 8 + k].map(|(t, c)| (t as usize, c))
    }
}

/// A loaded map: grid, arrangement, graph, transitions and scenario.
#[derive(Clone, Debug)]
pub struct World {
    pub name: String,
    pub map: GridMap,
    pub arrangement: Arrangement,
    pub graph: PolytopeGraph,
    pub transitions: TransitionTable,
    /// Unconstrained all-pairs grid distances.
    pub distances: DistanceTable,
    pub scenario: Scenario,
}

impl World {
    pub fn vertex_key(&self, v: CellId) -> String {
        self.arrangement.cells()[v.index()].sign_vector.key()
    }

    pub fn vertex_by_key(&self, key: &str) -> Result<CellId, WorldError> {
        self.graph
            .vertices()
            .iter()
            .copied()
            .find(|&v| self.vertex_key(v) == key)
            .ok_or_else(|| WorldError::UnknownVertexKey(key.to_string()))
    }

    pub fn edge_key(&self, e: EdgeRef) -> String {
        format!("{}-{}", self.vertex_key(e.from), self.vertex_key(e.to))
    }

    pub fn polytope_of(&self, p: GridPos) -> CellId {
        self.map.polytope_of(p)
    }

    pub fn true_goal(&self) -> GridPos {
        self.map.goal_candidates[self.scenario.true_goal_index]
    }

    /// Grid cell reached by taking `a` from `s`.
    pub fn apply_action(&self, s: GridPos, a: Action) -> Result<GridPos, WorldError> {
        let t = s.offset(a);
        if self.map.is_free(s) && self.map.is_free(t) {
            Ok(t)
        } else {
            Err(WorldError::InvalidAction { from: s, action: a })
        }
    }

    /// Graph crossing of the move `s -> s + a`.
    pub fn edge_crossed(&self, s: GridPos, a: Action) -> Result<Crossing, WorldError> {
        self.apply_action(s, a)?;
        let (_, c) = self
            .transitions
            .get(self.map.index(s), a.index())
            .expect("free move");
        Ok(c)
    }
}
