//! Navigation to an unknown goal under human path preferences.
//!
//! The crate builds a hyperplane arrangement of a polytopic obstacle map,
//! turns its obstacle-free cells into a graph, infers the joint posterior
//! over (goal, preferred exit of the current cell) from sparse heading cues,
//! and plans with POMCP. Baseline policies and an experiment runner
//! reproduce the comparison protocol.

pub mod experiments;
pub mod geometry;
pub mod intent;
pub mod pathcost;
pub mod planning;
pub mod worldgraph;

pub use geometry::{Arrangement, CellId, HalfPlane, ObstaclePolytope, Point, Rect};
pub use worldgraph::{
    Action, Crossing, EdgeRef, GridMap, GridPos, PolytopeGraph, Preference, World, WorldError,
};
