//! Plain Dijkstra on the 8-connected grid with explicit transition filtering.
//!
//! Crossings are recomputed from the grid's polytope labels and the graph's
//! adjacency, not taken from the world's transition table.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use prefnav_core::worldgraph::{CellId, EdgeRef, GridPos, World};

const MOVES: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

#[derive(PartialEq)]
struct Entry(f64, GridPos);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.partial_cmp(&self.0)
            .unwrap()
            .then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Whether the single step `s -> t` is allowed when only `exit` may leave
/// `exit.from`.
pub fn step_allowed(world: &World, s: GridPos, t: GridPos, exit: Option<EdgeRef>) -> bool {
    if !world.map.is_free(s) || !world.map.is_free(t) {
        return false;
    }
    let Some(exit) = exit else { return true };
    let (u, v): (CellId, CellId) = (world.map.polytope_of(s), world.map.polytope_of(t));
    if u != exit.from || u == v {
        return true;
    }
    // leaving the constrained vertex: must be a real graph edge and the preferred one
    let adjacent = world.graph.neighbors(u).unwrap().iter().any(|e| e.to == v);
    adjacent && v == exit.to
}

pub fn neighbours(world: &World, s: GridPos) -> Vec<(GridPos, f64)> {
    MOVES
        .iter()
        .map(|&(dx, dy)| GridPos::new(s.x + dx, s.y + dy))
        .filter(|&t| world.map.is_free(t))
        .map(|t| {
            let len = if t.x != s.x && t.y != s.y {
                std::f64::consts::SQRT_2
            } else {
                1.0
            };
            (t, len)
        })
        .collect()
}

/// Shortest length from `from` to `to` honouring `exit`; infinite when
/// unreachable.
pub fn dijkstra(world: &World, from: GridPos, to: GridPos, exit: Option<EdgeRef>) -> f64 {
    let mut dist = std::collections::HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(from, 0.0);
    heap.push(Entry(0.0, from));
    while let Some(Entry(d, u)) = heap.pop() {
        if u == to {
            return d;
        }
        if d > dist[&u] {
            continue;
        }
        for (t, len) in neighbours(world, u) {
            if !step_allowed(world, u, t, exit) {
                continue;
            }
            let nd = d + len;
            if dist.get(&t).is_none_or(|&old| nd < old - 1e-12) {
                dist.insert(t, nd);
                heap.push(Entry(nd, t));
            }
        }
    }
    f64::INFINITY
}

/// `C(s, o)`: the first step is filtered like every other.
pub fn cost_c(world: &World, s: GridPos, o: GridPos, g: GridPos, exit: Option<EdgeRef>) -> f64 {
    if !step_allowed(world, s, o, exit) {
        return f64::INFINITY;
    }
    let step = if o.x != s.x && o.y != s.y {
        std::f64::consts::SQRT_2
    } else {
        1.0
    };
    step + dijkstra(world, o, g, exit)
}
