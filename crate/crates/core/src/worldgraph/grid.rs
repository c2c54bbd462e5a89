use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{CellId, ObstaclePolytope, Point};

/// Integer grid location; `y` grows northward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct GridPos {
    pub x: i32,
    pub y: i32,
}

impl GridPos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, a: Action) -> GridPos {
        GridPos::new(self.x + a.dx as i32, self.y + a.dy as i32)
    }
}

impl From<[i32; 2]> for GridPos {
    fn from(v: [i32; 2]) -> Self {
        GridPos::new(v[0], v[1])
    }
}

impl From<GridPos> for [i32; 2] {
    fn from(p: GridPos) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for GridPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// One of the eight compass moves.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Action {
    pub dx: i8,
    pub dy: i8,
}

impl Action {
    /// Counter-clockwise from East; `ALL[k]` points at angle `k·π/4`.
    pub const ALL: [Action; 8] = [
        Action { dx: 1, dy: 0 },
        Action { dx: 1, dy: 1 },
        Action { dx: 0, dy: 1 },
        Action { dx: -1, dy: 1 },
        Action { dx: -1, dy: 0 },
        Action { dx: -1, dy: -1 },
        Action { dx: 0, dy: -1 },
        Action { dx: 1, dy: -1 },
    ];
    const NAMES: [&'static str; 8] = ["E", "NE", "N", "NW", "W", "SW", "S", "SE"];

    pub const EAST: Action = Action::ALL[0];
    pub const NORTH_EAST: Action = Action::ALL[1];
    pub const NORTH: Action = Action::ALL[2];
    pub const NORTH_WEST: Action = Action::ALL[3];
    pub const WEST: Action = Action::ALL[4];
    pub const SOUTH_WEST: Action = Action::ALL[5];
    pub const SOUTH: Action = Action::ALL[6];
    pub const SOUTH_EAST: Action = Action::ALL[7];

    pub fn from_index(k: usize) -> Action {
        Action::ALL[k % 8]
    }

    pub fn index(self) -> usize {
        Action::ALL
            .iter()
            .position(|a| *a == self)
            .expect("valid action")
    }

    pub fn is_diagonal(self) -> bool {
        self.dx != 0 && self.dy != 0
    }

    /// Euclidean step length, 1 or √2.
    pub fn length(self) -> f64 {
        if self.is_diagonal() {
            std::f64::consts::SQRT_2
        } else {
            1.0
        }
    }

    pub fn angle(self) -> f64 {
        self.index() as f64 * std::f64::consts::FRAC_PI_4
    }

    pub fn name(self) -> &'static str {
        Action::NAMES[self.index()]
    }

    pub fn between(from: GridPos, to: GridPos) -> Option<Action> {
        let (dx, dy) = (to.x - from.x, to.y - from.y);
        Action::ALL
            .iter()
            .copied()
            .find(|a| a.dx as i32 == dx && a.dy as i32 == dy)
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TryFrom<String> for Action {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Action::NAMES
            .iter()
            .position(|n| n.eq_ignore_ascii_case(&s))
            .map(Action::from_index)
            .ok_or_else(|| format!("unknown action {s:?}"))
    }
}

impl From<Action> for String {
    fn from(a: Action) -> Self {
        a.name().to_string()
    }
}

/// Discrete world the robot moves in.
#[derive(Clone, Debug)]
pub struct GridMap {
    pub width: u32,
    pub height: u32,
    pub cell_size: f64,
    /// Row-major (`y * width + x`); true where the cell center is inside an obstacle.
    pub blocked: Vec<bool>,
    pub obstacles: Vec<ObstaclePolytope>,
    pub start: GridPos,
    /// Candidate goals, in document order.
    pub goal_candidates: Vec<GridPos>,
    /// Arrangement cell of every grid cell center, row-major.
    pub cell_to_polytope: Vec<CellId>,
}

impl GridMap {
    pub fn in_bounds(&self, p: GridPos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as u32) < self.width && (p.y as u32) < self.height
    }

    pub fn index(&self, p: GridPos) -> usize {
        debug_assert!(self.in_bounds(p));
        p.y as usize * self.width as usize + p.x as usize
    }

    pub fn pos(&self, index: usize) -> GridPos {
        GridPos::new(
            (index % self.width as usize) as i32,
            (index / self.width as usize) as i32,
        )
    }

    pub fn num_cells(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_free(&self, p: GridPos) -> bool {
        self.in_bounds(p) && !self.blocked[self.index(p)]
    }

    pub fn center(&self, p: GridPos) -> Point {
        [
            (p.x as f64 + 0.5) * self.cell_size,
            (p.y as f64 + 0.5) * self.cell_size,
        ]
    }

    /// Arrangement cell containing the center of `p`.
    pub fn polytope_of(&self, p: GridPos) -> CellId {
        self.cell_to_polytope[self.index(p)]
    }

    pub fn free_cells(&self) -> impl Iterator<Item = GridPos> + '_ {
        (0..self.num_cells())
            .filter(|&i| !self.blocked[i])
            .map(|i| self.pos(i))
    }

    /// Free 8-neighbours of `p`, i.e. the valid actions, in [`Action::ALL`] order.
    pub fn valid_actions(&self, p: GridPos) -> impl Iterator<Item = Action> + '_ {
        Action::ALL
            .into_iter()
            .filter(move |a| self.is_free(p.offset(*a)))
    }
}
