use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Arrangement, CellId};

use super::WorldError;

/// Directed view of an undirected graph edge: leaving `from` towards `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeRef {
    pub from: CellId,
    pub to: CellId,
}

impl EdgeRef {
    pub fn new(from: CellId, to: CellId) -> Self {
        Self { from, to }
    }

    pub fn reversed(self) -> Self {
        Self {
            from: self.to,
            to: self.from,
        }
    }
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    /// Smaller endpoint.
    pub a: CellId,
    pub b: CellId,
    /// Index of the hyperplane separating the two cells.
    pub hyperplane: usize,
}

/// Adjacency graph over obstacle-free arrangement cells.
#[derive(Clone, Debug)]
pub struct PolytopeGraph {
    vertices: Vec<CellId>,
    edges: Vec<GraphEdge>,
    /// Indexed by cell id; `None` for obstacle cells.
    adjacency: Vec<Option<Vec<EdgeRef>>>,
    labels: BTreeMap<(CellId, CellId), usize>,
}

/// Connects free cells whose sign vectors differ only in one of their
/// essential hyperplanes.
pub fn build_graph(arrangement: &Arrangement) -> PolytopeGraph {
    let mut labels = BTreeMap::new();
    for cell in arrangement.free_cells() {
        for k in cell.essential_hyperplanes() {
            let flipped = cell.sign_vector.flipped(k);
            let Some(other) = arrangement.cell_by_sign(&flipped) else {
                continue;
            };
            if arrangement.cells()[other.index()].is_obstacle {
                continue;
            }
            let key = (cell.id.min(other), cell.id.max(other));
            labels.insert(key, k);
        }
    }
    let mut adjacency: Vec<Option<Vec<EdgeRef>>> = arrangement
        .cells()
        .iter()
        .map(|c| (!c.is_obstacle).then(Vec::new))
        .collect();
    let edges: Vec<GraphEdge> = labels
        .iter()
        .map(|(&(a, b), &hyperplane)| GraphEdge { a, b, hyperplane })
        .collect();
    for e in &edges {
        adjacency[e.a.index()]
            .as_mut()
            .expect("free")
            .push(EdgeRef::new(e.a, e.b));
        adjacency[e.b.index()]
            .as_mut()
            .expect("free")
            .push(EdgeRef::new(e.b, e.a));
    }
    for list in adjacency.iter_mut().flatten() {
        list.sort();
    }
    PolytopeGraph {
        vertices: arrangement.free_cells().map(|c| c.id).collect(),
        edges,
        adjacency,
        labels,
    }
}

impl PolytopeGraph {
    pub fn vertices(&self) -> &[CellId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn contains(&self, v: CellId) -> bool {
        matches!(self.adjacency.get(v.index()), Some(Some(_)))
    }

    /// Outgoing edges of `v`, sorted by target.
    pub fn neighbors(&self, v: CellId) -> Result<&[EdgeRef], WorldError> {
        match self.adjacency.get(v.index()) {
            Some(Some(list)) => Ok(list),
            _ => Err(WorldError::UnknownVertex(v)),
        }
    }

    pub fn degree(&self, v: CellId) -> usize {
        self.neighbors(v).map(|n| n.len()).unwrap_or(0)
    }

    pub fn is_edge(&self, e: EdgeRef) -> bool {
        self.labels
            .contains_key(&(e.from.min(e.to), e.from.max(e.to)))
    }

    /// Hyperplane crossed by `e`, if `e` is an edge.
    pub fn label(&self, e: EdgeRef) -> Option<usize> {
        self.labels
            .get(&(e.from.min(e.to), e.from.max(e.to)))
            .copied()
    }

    pub fn is_connected(&self) -> bool {
        let Some(&first) = self.vertices.first() else {
            return true;
        };
        let mut seen = vec![false; self.adjacency.len()];
        let mut stack = vec![first];
        seen[first.index()] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for e in self.neighbors(v).expect("vertex") {
                if !seen[e.to.index()] {
                    seen[e.to.index()] = true;
                    count += 1;
                    stack.push(e.to);
                }
            }
        }
        count == self.vertices.len()
    }
}
