//! Brute-force oracles, independent of the solver code paths they check.

pub mod geometry;
pub mod paths;
pub mod posterior;
pub mod worlds;
