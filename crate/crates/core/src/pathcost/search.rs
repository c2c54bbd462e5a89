use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::worldgraph::{Action, CellId, Crossing, EdgeRef, GridMap, TransitionTable};

use super::PathLength;

/// Only `exit` may be used to leave `vertex`; every other way out of it
/// (including invalid diagonals) is pruned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExitConstraint {
    pub vertex: CellId,
    pub exit: EdgeRef,
}

impl ExitConstraint {
    pub fn new(exit: EdgeRef) -> Self {
        Self {
            vertex: exit.from,
            exit,
        }
    }

    #[inline]
    pub fn allows(&self, c: Crossing) -> bool {
        match c {
            Crossing::None => true,
            Crossing::Edge { edge } => edge.from != self.vertex || edge == self.exit,
            Crossing::Invalid { edge } => edge.from != self.vertex,
        }
    }
}

/// Unconstrained all-pairs distances over the free grid cells.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    n: usize,
    table: Vec<PathLength>,
}

impl DistanceTable {
    pub fn compute(map: &GridMap, transitions: &TransitionTable) -> Self {
        let n = map.num_cells();
        let mut table = vec![PathLength::INFINITE; n * n];
        let mut heap = BinaryHeap::new();
        for src in map.free_cells().map(|p| map.index(p)) {
            let row = &mut table[src * n..(src + 1) * n];
            row[src] = PathLength::ZERO;
            heap.push(Reverse((PathLength::ZERO, src)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > row[u] {
                    continue;
                }
                for (k, a) in Action::ALL.into_iter().enumerate() {
                    if let Some((t, _)) = transitions.get(u, k) {
                        let nd = d + PathLength::step(a);
                        if nd < row[t] {
                            row[t] = nd;
                            heap.push(Reverse((nd, t)));
                        }
                    }
                }
            }
        }
        Self { n, table }
    }

    /// Distance between cell indices.
    #[inline]
    pub fn get(&self, from: usize, to: usize) -> PathLength {
        self.table[from * self.n + to]
    }
}

/// Admissible heuristic used by [`AStar`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Heuristic {
    /// Unconstrained distance from the precomputed table: exact when the
    /// constraint does not bind.
    #[default]
    Exact,
    Octile,
}

/// Reusable A* state. Buffers are stamped per search rather than cleared,
/// so a search costs only what it expands.
#[derive(Clone, Debug, Default)]
pub struct AStar {
    pub heuristic: Heuristic,
    g: Vec<PathLength>,
    parent: Vec<u32>,
    stamp: Vec<u32>,
    closed: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<Reverse<(PathLength, PathLength, u32)>>,
    /// Total node expansions across all searches.
    pub expansions: u64,
    pub searches: u64,
}

impl AStar {
    pub fn new(heuristic: Heuristic) -> Self {
        Self {
            heuristic,
            ..Self::default()
        }
    }

    fn reset(&mut self, n: usize) {
        if self.g.len() != n {
            self.g = vec![PathLength::INFINITE; n];
            self.parent = vec![u32::MAX; n];
            self.stamp = vec![0; n];
            self.closed = vec![0; n];
            self.generation = 0;
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.closed.fill(0);
            self.generation = 1;
        }
        self.heap.clear();
    }

    /// Shortest constrained length between cell indices. When `path` is
    /// given it receives the cell indices from `start` to `goal`.
    #[allow(clippy::too_many_arguments)]
    pub fn search(
        &mut self,
        map: &GridMap,
        transitions: &TransitionTable,
        distances: &DistanceTable,
        start: usize,
        goal: usize,
        constraint: Option<&ExitConstraint>,
        path: Option<&mut Vec<usize>>,
    ) -> PathLength {
        self.searches += 1;
        self.reset(map.num_cells());
        let goal_pos = map.pos(goal);
        let h = |idx: usize| match self.heuristic {
            Heuristic::Exact => distances.get(idx, goal),
            Heuristic::Octile => {
                let p = map.pos(idx);
                PathLength::octile(goal_pos.x - p.x, goal_pos.y - p.y)
            }
        };
        let gen = self.generation;
        let h0 = h(start);
        if !h0.is_finite() {
            return PathLength::INFINITE;
        }
        self.g[start] = PathLength::ZERO;
        self.stamp[start] = gen;
        self.parent[start] = u32::MAX;
        self.heap.push(Reverse((h0, h0, start as u32)));
        let mut found = PathLength::INFINITE;
        while let Some(Reverse((_, _, u))) = self.heap.pop() {
            let u = u as usize;
            if self.closed[u] == gen {
                continue;
            }
            self.closed[u] = gen;
            self.expansions += 1;
            if u == goal {
                found = self.g[u];
                break;
            }
            let gu = self.g[u];
            for (k, a) in Action::ALL.into_iter().enumerate() {
                let Some((t, crossing)) = transitions.get(u, k) else {
                    continue;
                };
                if self.closed[t] == gen || constraint.is_some_and(|c| !c.allows(crossing)) {
                    continue;
                }
                let nd = gu + PathLength::step(a);
                if self.stamp[t] != gen || nd < self.g[t] {
                    let ht = h(t);
                    if !ht.is_finite() {
                        continue;
                    }
                    self.stamp[t] = gen;
                    self.g[t] = nd;
                    self.parent[t] = u as u32;
                    self.heap.push(Reverse((nd + ht, ht, t as u32)));
                }
            }
        }
        if let Some(out) = path {
            out.clear();
            if found.is_finite() {
                let mut v = goal;
                out.push(v);
                while self.parent[v] != u32::MAX {
                    v = self.parent[v] as usize;
                    out.push(v);
                }
                out.reverse();
            }
        }
        found
    }
}
