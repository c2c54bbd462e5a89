//! Planar half-planes, obstacle H-representations and the hyperplane
//! arrangement built from them.

mod arrangement;
pub mod lp;
mod sign;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arrangement::{
    build_arrangement, Arrangement, BoundSide, Cell, CellId, ConstraintRef, EssentialConstraint,
};
pub use lp::{solve_lp2d, Lp2d, LpSolution, LpStatus};
pub use sign::{Side, SignVector};

/// A point in map coordinates.
pub type Point = [f64; 2];

/// Points closer than this to a hyperplane have no well-defined sign.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("half-plane normal must be finite and nonzero")]
    DegenerateNormal,
    #[error("environment bounds are degenerate")]
    DegenerateBounds,
    #[error("at least one obstacle is required")]
    NoObstacles,
    #[error("obstacle {id}: {reason}")]
    InvalidObstacle { id: usize, reason: String },
    #[error("hyperplanes {first} and {second} are coincident")]
    CoincidentHyperplanes { first: usize, second: usize },
    #[error("hyperplane {index} coincides with the environment boundary")]
    HyperplaneOnBoundary { index: usize },
    #[error("point ({x}, {y}) lies outside the environment bounds")]
    OutOfBounds { x: f64, y: f64 },
    #[error("point ({x}, {y}) lies on hyperplane {index}")]
    BoundaryPoint { x: f64, y: f64, index: usize },
    #[error("no cell matches the sign vector of ({x}, {y})")]
    ArrangementIncomplete { x: f64, y: f64 },
    #[error("linear program failed while reducing cell {cell}")]
    NumericalFailure { cell: usize },
    #[error("unknown cell id {0}")]
    UnknownCell(usize),
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// The closed half-plane `{x : normal·x <= offset}`.
///
/// Normals are rescaled so that `max(|n1|, |n2|) = 1`; two half-planes
/// describing the same set therefore compare equal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHalfPlane", into = "RawHalfPlane")]
pub struct HalfPlane {
    normal: Point,
    offset: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct RawHalfPlane {
    n: Point,
    c: f64,
}

impl TryFrom<RawHalfPlane> for HalfPlane {
    type Error = GeometryError;

    fn try_from(raw: RawHalfPlane) -> Result<Self, Self::Error> {
        HalfPlane::new(raw.n, raw.c)
    }
}

impl From<HalfPlane> for RawHalfPlane {
    fn from(hp: HalfPlane) -> Self {
        RawHalfPlane {
            n: hp.normal,
            c: hp.offset,
        }
    }
}

impl HalfPlane {
    pub fn new(normal: Point, offset: f64) -> Result<Self, GeometryError> {
        let scale = normal[0].abs().max(normal[1].abs());
        let finite = normal.iter().all(|v| v.is_finite()) && offset.is_finite();
        if !(finite && scale > 0.0) {
            return Err(GeometryError::DegenerateNormal);
        }
        Ok(Self {
            normal: [normal[0] / scale, normal[1] / scale],
            offset: offset / scale,
        })
    }

    pub fn normal(&self) -> Point {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `normal·p - offset`; negative inside the half-plane.
    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        dot(self.normal, p) - self.offset
    }

    /// Euclidean signed distance of `p` to the boundary line.
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.eval(p) / dot(self.normal, self.normal).sqrt()
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.eval(p) <= tol
    }

    /// The complementary closed half-plane `{x : normal·x >= offset}`.
    pub fn flipped(&self) -> Self {
        Self {
            normal: [-self.normal[0], -self.normal[1]],
            offset: -self.offset,
        }
    }

    /// The closed region where `sign(normal·x - offset)` equals `side`.
    pub fn oriented(&self, side: Side) -> Self {
        match side {
            Side::Neg => *self,
            Side::Pos => self.flipped(),
        }
    }

    /// Shrinks the half-plane by `margin` (Euclidean distance).
    pub fn tightened(&self, margin: f64) -> Self {
        Self {
            normal: self.normal,
            offset: self.offset - margin * dot(self.normal, self.normal).sqrt(),
        }
    }

    /// True when both half-planes have the same boundary line, in either
    /// orientation.
    pub fn same_line(&self, other: &HalfPlane, tol: f64) -> bool {
        let cross = self.normal[0] * other.normal[1] - self.normal[1] * other.normal[0];
        if cross.abs() > tol {
            return false;
        }
        let aligned = dot(self.normal, other.normal) > 0.0;
        let other = if aligned { *other } else { other.flipped() };
        (self.normal[0] - other.normal[0]).abs() <= tol
            && (self.normal[1] - other.normal[1]).abs() <= tol
            && (self.offset - other.offset).abs() <= tol
    }
}

/// Axis-aligned environment rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Result<Self, GeometryError> {
        let ok = min.iter().chain(max.iter()).all(|v| v.is_finite())
            && max[0] > min[0]
            && max[1] > min[1];
        if !ok {
            return Err(GeometryError::DegenerateBounds);
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains_strict(&self, p: Point) -> bool {
        p[0] > self.min[0] && p[0] < self.max[0] && p[1] > self.min[1] && p[1] < self.max[1]
    }

    /// The four boundary half-planes, in [`BoundSide`] order.
    pub fn halfplanes(&self) -> [HalfPlane; 4] {
        [
            HalfPlane {
                normal: [-1.0, 0.0],
                offset: -self.min[0],
            },
            HalfPlane {
                normal: [1.0, 0.0],
                offset: self.max[0],
            },
            HalfPlane {
                normal: [0.0, -1.0],
                offset: -self.min[1],
            },
            HalfPlane {
                normal: [0.0, 1.0],
                offset: self.max[1],
            },
        ]
    }

    /// Counter-clockwise corner loop.
    pub fn corners(&self) -> Vec<Point> {
        vec![
            [self.min[0], self.min[1]],
            [self.max[0], self.min[1]],
            [self.max[0], self.max[1]],
            [self.min[0], self.max[1]],
        ]
    }
}

/// A convex obstacle `{x : A x <= b}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstaclePolytope {
    pub id: usize,
    pub halfplanes: Vec<HalfPlane>,
}

impl ObstaclePolytope {
    pub fn new(id: usize, halfplanes: Vec<HalfPlane>) -> Self {
        Self { id, halfplanes }
    }

    /// Axis-aligned box obstacle.
    pub fn rectangle(id: usize, min: Point, max: Point) -> Self {
        let r = Rect { min, max };
        Self {
            id,
            halfplanes: r.halfplanes().to_vec(),
        }
    }

    /// Builds the H-representation of the convex hull of a counter-clockwise
    /// vertex loop.
    pub fn from_ccw_vertices(id: usize, vertices: &[Point]) -> Result<Self, GeometryError> {
        let n = vertices.len();
        let halfplanes = (0..n)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                // outward normal of a CCW edge
                let normal = [b[1] - a[1], a[0] - b[0]];
                HalfPlane::new(normal, dot(normal, a))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { id, halfplanes })
    }

    pub fn contains(&self, p: Point) -> bool {
        self.halfplanes.iter().all(|h| h.eval(p) < 0.0)
    }

    /// Vertex loop of the obstacle, clipped from `bounds`.
    pub fn outline(&self, bounds: &Rect) -> Vec<Point> {
        clip_convex(bounds.corners(), &self.halfplanes)
    }
}

/// Sutherland–Hodgman clipping of a convex polygon by a set of half-planes.
pub fn clip_convex(mut poly: Vec<Point>, halfplanes: &[HalfPlane]) -> Vec<Point> {
    for h in halfplanes {
        if poly.is_empty() {
            break;
        }
        let mut out = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let cur = poly[i];
            let next = poly[(i + 1) % poly.len()];
            let (fc, fn_) = (h.eval(cur), h.eval(next));
            if fc <= 0.0 {
                out.push(cur);
            }
            if (fc < 0.0 && fn_ > 0.0) || (fc > 0.0 && fn_ < 0.0) {
                let t = fc / (fc - fn_);
                out.push([
                    cur[0] + t * (next[0] - cur[0]),
                    cur[1] + t * (next[1] - cur[1]),
                ]);
            }
        }
        poly = out;
    }
    poly
}

/// Shoelace area of a simple polygon (positive for CCW loops).
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

/// Area centroid of a convex polygon; falls back to the vertex mean for
/// degenerate loops.
pub fn polygon_centroid(poly: &[Point]) -> Point {
    let area = polygon_area(poly);
    let n = poly.len();
    if area.abs() < 1e-14 {
        let inv = 1.0 / n.max(1) as f64;
        return poly.iter().fold([0.0, 0.0], |acc, p| {
            [acc[0] + p[0] * inv, acc[1] + p[1] * inv]
        });
    }
    let mut c = [0.0, 0.0];
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let w = a[0] * b[1] - b[0] * a[1];
        c[0] += (a[0] + b[0]) * w;
        c[1] += (a[1] + b[1]) * w;
    }
    [c[0] / (6.0 * area), c[1] / (6.0 * area)]
}
