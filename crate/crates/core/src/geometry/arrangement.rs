use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::lp::{Lp2d, LpStatus};
use super::{
    clip_convex, polygon_area, polygon_centroid, GeometryError, HalfPlane, ObstaclePolytope, Point,
    Rect, Side, SignVector, BOUNDARY_TOL,
};

/// Cells thinner than this (inscribed margin) are treated as empty.
const INTERIOR_MARGIN: f64 = 1e-7;
/// Minimum violation for a constraint to count as essential.
const ESSENTIAL_TOL: f64 = 1e-9;
/// Lattice resolution used to seed cell discovery.
const SEED_LATTICE: usize = 16;

/// Dense arrangement cell index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl CellId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundSide {
    Left,
    Right,
    Bottom,
    Top,
}

impl BoundSide {
    pub const ALL: [BoundSide; 4] = [
        BoundSide::Left,
        BoundSide::Right,
        BoundSide::Bottom,
        BoundSide::Top,
    ];
}

/// A constraint of a cell: either an obstacle hyperplane or an environment
/// boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintRef {
    Hyperplane(usize),
    Bound(BoundSide),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EssentialConstraint {
    pub constraint: ConstraintRef,
    /// Side of the hyperplane the cell lies on; boundaries are always `Neg`.
    pub side: Side,
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub id: CellId,
    pub sign_vector: SignVector,
    /// Non-redundant constraints, sorted.
    pub essential: Vec<EssentialConstraint>,
    pub is_obstacle: bool,
    /// Counter-clockwise vertex loop.
    pub polygon: Vec<Point>,
    /// A point strictly inside the cell.
    pub interior: Point,
}

impl Cell {
    pub fn essential_hyperplanes(&self) -> impl Iterator<Item = usize> + '_ {
        self.essential.iter().filter_map(|e| match e.constraint {
            ConstraintRef::Hyperplane(k) => Some(k),
            ConstraintRef::Bound(_) => None,
        })
    }

    pub fn is_essential(&self, constraint: ConstraintRef) -> bool {
        self.essential.iter().any(|e| e.constraint == constraint)
    }
}

/// Partition of the bounded environment by every obstacle hyperplane.
#[derive(Clone, Debug)]
pub struct Arrangement {
    hyperplanes: Vec<HalfPlane>,
    /// `obstacle_ranges[i]` is the block of hyperplane indices owned by obstacle `i`.
    obstacle_ranges: Vec<std::ops::Range<usize>>,
    bounds: Rect,
    cells: Vec<Cell>,
    lookup: HashMap<SignVector, CellId>,
}

/// Builds the arrangement, seeding discovery from a regular lattice.
pub fn build_arrangement(
    obstacles: &[ObstaclePolytope],
    bounds: Rect,
) -> Result<Arrangement, GeometryError> {
    let seeds = lattice(&bounds, SEED_LATTICE);
    Arrangement::build(obstacles, bounds, &seeds)
}

fn lattice(bounds: &Rect, n: usize) -> Vec<Point> {
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pts.push([
                bounds.min[0] + bounds.width() * (i as f64 + 0.5) / n as f64,
                bounds.min[1] + bounds.height() * (j as f64 + 0.5) / n as f64,
            ]);
        }
    }
    pts
}

impl Arrangement {
    /// Builds the arrangement. Cells are discovered from the sign vectors of
    /// `seeds` and closed under flips of essential hyperplanes; since the
    /// bounded free space is connected through facets, one valid seed is
    /// enough, the rest only save LP work.
    pub fn build(
        obstacles: &[ObstaclePolytope],
        bounds: Rect,
        seeds: &[Point],
    ) -> Result<Self, GeometryError> {
        let bounds = Rect::new(bounds.min, bounds.max)?;
        if obstacles.is_empty() {
            return Err(GeometryError::NoObstacles);
        }
        let lp = Lp2d::default();
        let mut hyperplanes = Vec::new();
        let mut obstacle_ranges = Vec::new();
        for (i, obs) in obstacles.iter().enumerate() {
            validate_obstacle(i, obs, &bounds, &lp)?;
            let start = hyperplanes.len();
            hyperplanes.extend_from_slice(&obs.halfplanes);
            obstacle_ranges.push(start..hyperplanes.len());
        }
        for i in 0..hyperplanes.len() {
            for j in (i + 1)..hyperplanes.len() {
                if hyperplanes[i].same_line(&hyperplanes[j], 1e-9) {
                    return Err(GeometryError::CoincidentHyperplanes {
                        first: i,
                        second: j,
                    });
                }
            }
            if bounds
                .halfplanes()
                .iter()
                .any(|b| b.same_line(&hyperplanes[i], 1e-9))
            {
                return Err(GeometryError::HyperplaneOnBoundary { index: i });
            }
        }

        let mut arr = Arrangement {
            hyperplanes,
            obstacle_ranges,
            bounds,
            cells: Vec::new(),
            lookup: HashMap::new(),
        };

        let mut found: BTreeMap<SignVector, (Vec<EssentialConstraint>, Point)> = BTreeMap::new();
        let mut queue = VecDeque::new();
        for &p in seeds {
            if let Ok(sv) = arr.sign_vector(p) {
                if !found.contains_key(&sv) && !queue.contains(&sv) {
                    queue.push_back(sv);
                }
            }
        }
        if queue.is_empty() {
            // every seed was on a hyperplane or out of bounds; fall back to a finer lattice
            for p in lattice(&arr.bounds, 4 * SEED_LATTICE + 1) {
                if let Ok(sv) = arr.sign_vector(p) {
                    queue.push_back(sv);
                    break;
                }
            }
        }
        let mut pending: std::collections::HashSet<SignVector> = queue.iter().cloned().collect();
        while let Some(sv) = queue.pop_front() {
            pending.remove(&sv);
            if found.contains_key(&sv) {
                continue;
            }
            let Some(interior) = arr.interior_point(&sv, &lp) else {
                continue;
            };
            let essential = arr
                .essential_for(&sv, &lp)
                .ok_or(GeometryError::NumericalFailure { cell: found.len() })?;
            for e in &essential {
                if let ConstraintRef::Hyperplane(k) = e.constraint {
                    let next = sv.flipped(k);
                    if !found.contains_key(&next) && !pending.contains(&next) {
                        pending.insert(next.clone());
                        queue.push_back(next);
                    }
                }
            }
            found.insert(sv, (essential, interior));
        }

        for (idx, (sv, (essential, lp_point))) in found.into_iter().enumerate() {
            let id = CellId(idx as u32);
            let constraints: Vec<HalfPlane> = essential
                .iter()
                .filter_map(|e| match e.constraint {
                    ConstraintRef::Hyperplane(k) => Some(arr.hyperplanes[k].oriented(e.side)),
                    ConstraintRef::Bound(_) => None,
                })
                .collect();
            let polygon = clip_convex(arr.bounds.corners(), &constraints);
            let centroid = polygon_centroid(&polygon);
            let interior = if polygon_area(&polygon) > 1e-12 && arr.strictly_inside(&sv, centroid) {
                centroid
            } else {
                lp_point
            };
            let is_obstacle = arr.is_obstacle_pattern(&sv);
            arr.lookup.insert(sv.clone(), id);
            arr.cells.push(Cell {
                id,
                sign_vector: sv,
                essential,
                is_obstacle,
                polygon,
                interior,
            });
        }
        Ok(arr)
    }

    pub fn hyperplanes(&self) -> &[HalfPlane] {
        &self.hyperplanes
    }

    pub fn num_hyperplanes(&self) -> usize {
        self.hyperplanes.len()
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: CellId) -> Result<&Cell, GeometryError> {
        self.cells
            .get(id.index())
            .ok_or(GeometryError::UnknownCell(id.index()))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| !c.is_obstacle)
    }

    pub fn num_obstacles(&self) -> usize {
        self.obstacle_ranges.len()
    }

    /// Hyperplane indices belonging to obstacle `i`.
    pub fn obstacle_block(&self, i: usize) -> std::ops::Range<usize> {
        self.obstacle_ranges[i].clone()
    }

    /// Index of the obstacle that owns hyperplane `k`.
    pub fn owner_of(&self, k: usize) -> usize {
        self.obstacle_ranges
            .iter()
            .position(|r| r.contains(&k))
            .expect("hyperplane index in range")
    }

    pub fn cell_by_sign(&self, sv: &SignVector) -> Option<CellId> {
        self.lookup.get(sv).copied()
    }

    /// Sign of every hyperplane at `point`.
    pub fn sign_vector(&self, point: Point) -> Result<SignVector, GeometryError> {
        if !self.bounds.contains_strict(point) {
            return Err(GeometryError::OutOfBounds {
                x: point[0],
                y: point[1],
            });
        }
        let mut sides = Vec::with_capacity(self.hyperplanes.len());
        for (index, h) in self.hyperplanes.iter().enumerate() {
            let d = h.signed_distance(point);
            if d.abs() <= BOUNDARY_TOL {
                return Err(GeometryError::BoundaryPoint {
                    x: point[0],
                    y: point[1],
                    index,
                });
            }
            sides.push(Side::of(d));
        }
        Ok(SignVector::from_sides(sides))
    }

    pub fn locate_cell(&self, point: Point) -> Result<CellId, GeometryError> {
        let sv = self.sign_vector(point)?;
        self.cell_by_sign(&sv)
            .ok_or(GeometryError::ArrangementIncomplete {
                x: point[0],
                y: point[1],
            })
    }

    /// Non-redundant constraints of an existing cell, recomputed by LP.
    pub fn essential_constraints(
        &self,
        cell: CellId,
    ) -> Result<Vec<EssentialConstraint>, GeometryError> {
        let c = self.cell(cell)?;
        self.essential_for(&c.sign_vector, &Lp2d::default())
            .ok_or(GeometryError::NumericalFailure { cell: cell.index() })
    }

    /// True when the open region with sign vector `sv` has interior within
    /// the bounds.
    pub fn is_nonempty(&self, sv: &SignVector) -> bool {
        self.interior_point(sv, &Lp2d::default()).is_some()
    }

    /// Half-planes (closed) describing the region with sign vector `sv`,
    /// followed by the four bounds.
    pub fn cell_constraints(&self, sv: &SignVector) -> Vec<HalfPlane> {
        let mut out: Vec<HalfPlane> = self
            .hyperplanes
            .iter()
            .zip(sv.iter())
            .map(|(h, side)| h.oriented(side))
            .collect();
        out.extend(self.bounds.halfplanes());
        out
    }

    fn interior_point(&self, sv: &SignVector, lp: &Lp2d) -> Option<Point> {
        let tight: Vec<HalfPlane> = self
            .cell_constraints(sv)
            .iter()
            .map(|h| h.tightened(INTERIOR_MARGIN))
            .collect();
        let sol = lp.solve([0.0, 0.0], &tight);
        (sol.status == LpStatus::Optimal).then_some(sol.point)
    }

    /// Constraint `j` is essential iff the region defined by all other
    /// constraints reaches strictly past it.
    fn essential_for(&self, sv: &SignVector, lp: &Lp2d) -> Option<Vec<EssentialConstraint>> {
        let all = self.cell_constraints(sv);
        let n = self.hyperplanes.len();
        let mut others = Vec::with_capacity(all.len() - 1);
        let mut out = Vec::new();
        for j in 0..all.len() {
            others.clear();
            others.extend(
                all.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != j)
                    .map(|(_, h)| *h),
            );
            let sol = lp.solve(all[j].normal(), &others);
            let essential = match sol.status {
                LpStatus::Unbounded => true,
                LpStatus::Optimal => sol.value - all[j].offset() > ESSENTIAL_TOL,
                LpStatus::Infeasible => return None,
            };
            if essential {
                out.push(if j < n {
                    EssentialConstraint {
                        constraint: ConstraintRef::Hyperplane(j),
                        side: sv.get(j),
                    }
                } else {
                    EssentialConstraint {
                        constraint: ConstraintRef::Bound(BoundSide::ALL[j - n]),
                        side: Side::Neg,
                    }
                });
            }
        }
        Some(out)
    }

    fn strictly_inside(&self, sv: &SignVector, p: Point) -> bool {
        self.sign_vector(p).map(|s| &s == sv).unwrap_or(false)
    }

    fn is_obstacle_pattern(&self, sv: &SignVector) -> bool {
        self.obstacle_ranges
            .iter()
            .any(|r| r.clone().all(|k| sv.get(k) == Side::Neg))
    }
}

fn validate_obstacle(
    i: usize,
    obs: &ObstaclePolytope,
    bounds: &Rect,
    lp: &Lp2d,
) -> Result<(), GeometryError> {
    let invalid = |reason: &str| GeometryError::InvalidObstacle {
        id: i,
        reason: reason.to_string(),
    };
    if obs.halfplanes.len() < 3 {
        return Err(invalid("needs at least 3 half-planes"));
    }
    let tight: Vec<HalfPlane> = obs
        .halfplanes
        .iter()
        .map(|h| h.tightened(INTERIOR_MARGIN))
        .collect();
    if lp.solve([0.0, 0.0], &tight).status != LpStatus::Optimal {
        return Err(invalid("empty interior"));
    }
    for (dir, limit) in [
        ([1.0, 0.0], bounds.max[0]),
        ([-1.0, 0.0], -bounds.min[0]),
        ([0.0, 1.0], bounds.max[1]),
        ([0.0, -1.0], -bounds.min[1]),
    ] {
        let sol = lp.solve(dir, &obs.halfplanes);
        match sol.status {
            LpStatus::Unbounded => return Err(invalid("unbounded")),
            LpStatus::Infeasible => return Err(invalid("empty interior")),
            LpStatus::Optimal if sol.value >= limit - BOUNDARY_TOL => {
                return Err(invalid("not strictly inside the environment bounds"))
            }
            LpStatus::Optimal => {}
        }
    }
    Ok(())
}
