use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{polygon_centroid, Arrangement, HalfPlane, ObstaclePolytope, Point, Rect};
use crate::pathcost::DistanceTable;

use super::{
    build_graph, Action, EdgeRef, GridMap, GridPos, PolytopeGraph, Preference, Scenario,
    TransitionTable, World, WorldError,
};

/// Minimum distance between a grid-cell center and any hyperplane.
const CENTER_CLEARANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleDoc {
    pub halfplanes: Vec<HalfPlane>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreferenceMode {
    #[serde(rename = "auto_ccw")]
    AutoCcw,
}

/// Either generated (counter-clockwise around one obstacle) or explicit
/// `vertex key -> "fromKey-toKey"` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PreferenceSpec {
    Auto {
        mode: PreferenceMode,
        obstacle: usize,
    },
    Explicit(BTreeMap<String, String>),
}

/// On-disk map format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub width: u32,
    pub height: u32,
    pub cell_size: f64,
    pub obstacles: Vec<ObstacleDoc>,
    pub start: GridPos,
    pub goal_candidates: Vec<GridPos>,
    pub true_goal_index: usize,
    pub preference: PreferenceSpec,
    #[serde(rename = "T_max")]
    pub t_max: u32,
    #[serde(rename = "delta_T")]
    pub delta_t: u32,
    pub gamma_h: f64,
}

/// Parses and validates a JSON map document.
pub fn load_map(name: &str, bytes: &[u8]) -> Result<World, WorldError> {
    let doc: MapDocument =
        serde_json::from_slice(bytes).map_err(|e| WorldError::Schema(e.to_string()))?;
    doc.build(name)
}

impl MapDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map documents serialize")
    }

    pub fn build(&self, name: &str) -> Result<World, WorldError> {
        if self.width == 0 || self.height == 0 {
            return Err(WorldError::InvalidMap(
                "grid must have at least one cell".into(),
            ));
        }
        if !(self.cell_size.is_finite() && self.cell_size > 0.0) {
            return Err(WorldError::InvalidMap("cell_size must be positive".into()));
        }
        if self.t_max == 0 || self.delta_t == 0 {
            return Err(WorldError::InvalidMap(
                "T_max and delta_T must be at least 1".into(),
            ));
        }
        if !(self.gamma_h.is_finite() && self.gamma_h >= 0.0) {
            return Err(WorldError::InvalidMap(
                "gamma_h must be finite and nonnegative".into(),
            ));
        }
        let obstacles: Vec<ObstaclePolytope> = self
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| ObstaclePolytope::new(i, o.halfplanes.clone()))
            .collect();
        let bounds = Rect::new(
            [0.0, 0.0],
            [
                self.width as f64 * self.cell_size,
                self.height as f64 * self.cell_size,
            ],
        )?;

        let mut map = GridMap {
            width: self.width,
            height: self.height,
            cell_size: self.cell_size,
            blocked: Vec::new(),
            obstacles,
            start: self.start,
            goal_candidates: self.goal_candidates.clone(),
            cell_to_polytope: Vec::new(),
        };
        let centers: Vec<Point> = (0..map.num_cells())
            .map(|i| map.center(map.pos(i)))
            .collect();
        let planes: Vec<&HalfPlane> = map.obstacles.iter().flat_map(|o| &o.halfplanes).collect();
        for (i, c) in centers.iter().enumerate() {
            if let Some(k) = planes
                .iter()
                .position(|h| h.signed_distance(*c).abs() < CENTER_CLEARANCE)
            {
                return Err(WorldError::CenterOnHyperplane {
                    pos: map.pos(i),
                    hyperplane: k,
                });
            }
        }

        let arrangement = Arrangement::build(&map.obstacles, bounds, &centers)?;
        map.cell_to_polytope = centers
            .iter()
            .map(|c| arrangement.locate_cell(*c))
            .collect::<Result<_, _>>()?;
        map.blocked = map
            .cell_to_polytope
            .iter()
            .map(|id| arrangement.cells()[id.index()].is_obstacle)
            .collect();

        if !map.is_free(map.start) {
            return Err(WorldError::StartBlocked(map.start));
        }
        if map.goal_candidates.is_empty() {
            return Err(WorldError::InvalidMap("goal_candidates is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for (index, &pos) in map.goal_candidates.iter().enumerate() {
            if !map.is_free(pos) {
                return Err(WorldError::GoalBlocked { index, pos });
            }
            if !seen.insert(pos) {
                return Err(WorldError::InvalidMap(format!(
                    "duplicate goal candidate {pos}"
                )));
            }
        }
        if self.true_goal_index >= map.goal_candidates.len() {
            return Err(WorldError::InvalidMap(format!(
                "true_goal_index {} out of range",
                self.true_goal_index
            )));
        }

        let graph = build_graph(&arrangement);
        check_grid_consistency(&map, &graph)?;
        let transitions = TransitionTable::build(&map, &graph);
        let exits = match &self.preference {
            PreferenceSpec::Auto { obstacle, .. } => {
                auto_ccw(&arrangement, &graph, &map, *obstacle)?
            }
            PreferenceSpec::Explicit(pairs) => explicit(&arrangement, &graph, pairs)?,
        };
        let preference = Preference::new(&graph, exits)?;

        let distances = DistanceTable::compute(&map, &transitions);
        Ok(World {
            name: name.to_string(),
            map,
            arrangement,
            graph,
            transitions,
            distances,
            scenario: Scenario {
                true_goal_index: self.true_goal_index,
                preference,
                t_max: self.t_max,
                delta_t: self.delta_t,
                gamma_h: self.gamma_h,
            },
        })
    }
}

/// Every cardinal move between free cells must stay in one polytope or cross
/// a graph edge; otherwise the grid is too coarse for the arrangement.
fn check_grid_consistency(map: &GridMap, graph: &PolytopeGraph) -> Result<(), WorldError> {
    for s in map.free_cells() {
        for a in [Action::EAST, Action::NORTH] {
            let t = s.offset(a);
            if !map.is_free(t) {
                continue;
            }
            let (u, v) = (map.polytope_of(s), map.polytope_of(t));
            if u != v && !graph.is_edge(EdgeRef::new(u, v)) {
                return Err(WorldError::InvalidMap(format!(
                    "grid cells {s} and {t} lie in non-adjacent polytopes"
                )));
            }
        }
    }
    Ok(())
}

fn explicit(
    arrangement: &Arrangement,
    graph: &PolytopeGraph,
    pairs: &BTreeMap<String, String>,
) -> Result<Vec<Option<EdgeRef>>, WorldError> {
    let by_key: BTreeMap<String, _> = graph
        .vertices()
        .iter()
        .map(|&v| (arrangement.cells()[v.index()].sign_vector.key(), v))
        .collect();
    let resolve = |k: &str| {
        by_key
            .get(k)
            .copied()
            .ok_or_else(|| WorldError::UnknownVertexKey(k.to_string()))
    };
    let mut exits = vec![None; arrangement.cells().len()];
    for (vertex, edge) in pairs {
        let v = resolve(vertex)?;
        let (from, to) = edge
            .split_once('-')
            .ok_or_else(|| WorldError::Preference(format!("malformed edge {edge:?}")))?;
        let e = EdgeRef::new(resolve(from)?, resolve(to)?);
        if e.from != v {
            return Err(WorldError::Preference(format!(
                "edge {edge:?} does not leave {vertex}"
            )));
        }
        exits[v.index()] = Some(e);
    }
    Ok(exits)
}

/// Counter-clockwise circulation around obstacle `obstacle`: each vertex
/// prefers the neighbour that advances furthest counter-clockwise (by polygon
/// centroid angle about the obstacle centroid), or, when none advances, the
/// one that retreats least.
fn auto_ccw(
    arrangement: &Arrangement,
    graph: &PolytopeGraph,
    map: &GridMap,
    obstacle: usize,
) -> Result<Vec<Option<EdgeRef>>, WorldError> {
    let o = map
        .obstacles
        .get(obstacle)
        .ok_or_else(|| WorldError::Preference(format!("no obstacle {obstacle}")))?;
    let c = polygon_centroid(&o.outline(&arrangement.bounds()));
    let angle = |v: crate::geometry::CellId| {
        let p = polygon_centroid(&arrangement.cells()[v.index()].polygon);
        (p[1] - c[1]).atan2(p[0] - c[0])
    };
    let mut exits = vec![None; arrangement.cells().len()];
    for &v in graph.vertices() {
        let base = angle(v);
        let mut best: Option<(bool, f64, EdgeRef)> = None;
        for &e in graph.neighbors(v)? {
            let mut d = angle(e.to) - base;
            while d <= -PI {
                d += 2.0 * PI;
            }
            while d > PI {
                d -= 2.0 * PI;
            }
            let key = (d > 0.0, d);
            if best.is_none_or(|(p, bd, _)| key.0 && !p || (key.0 == p && d > bd)) {
                best = Some((key.0, d, e));
            }
        }
        exits[v.index()] = best.map(|b| b.2);
    }
    Ok(exits)
}

impl World {
    /// Resolves a preference specification against this world's graph.
    pub fn resolve_preference(&self, spec: &PreferenceSpec) -> Result<Preference, WorldError> {
        let exits = match spec {
            PreferenceSpec::Auto { obstacle, .. } => {
                auto_ccw(&self.arrangement, &self.graph, &self.map, *obstacle)?
            }
            PreferenceSpec::Explicit(pairs) => explicit(&self.arrangement, &self.graph, pairs)?,
        };
        Preference::new(&self.graph, exits)
    }

    /// Explicit `vertex key -> edge key` form of `theta`.
    pub fn preference_spec(&self, theta: &Preference) -> PreferenceSpec {
        PreferenceSpec::Explicit(
            theta
                .iter()
                .map(|e| (self.vertex_key(e.from), self.edge_key(e)))
                .collect(),
        )
    }
}
