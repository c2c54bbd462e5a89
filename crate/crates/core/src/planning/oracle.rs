use crate::worldgraph::{Action, GridPos, Preference, World};

use super::{preference_term, RewardParams};

/// Finite-horizon optimal values for a known goal and preference.
#[derive(Clone, Debug)]
pub struct ValueTable {
    pub horizon: u32,
    /// `values[cell index]` with `horizon` steps to go.
    pub values: Vec<f64>,
    /// `q[8 * cell index + action]`, `-inf` for invalid actions.
    pub q: Vec<f64>,
}

impl ValueTable {
    pub fn value(&self, world: &World, s: GridPos) -> f64 {
        self.values[world.map.index(s)]
    }

    pub fn q(&self, world: &World, s: GridPos, a: Action) -> f64 {
        self.q[8 * world.map.index(s) + a.index()]
    }

    /// Actions whose value is within `tol` of the best one.
    pub fn optimal_actions(&self, world: &World, s: GridPos, tol: f64) -> Vec<Action> {
        let v = self.value(world, s);
        Action::ALL
            .into_iter()
            .filter(|&a| self.q(world, s, a) >= v - tol)
            .collect()
    }
}

/// Backward induction over grid cells with the exact one-step reward. The
/// goal is absorbing. `theta = None` drops the preference term.
pub fn value_iteration(
    world: &World,
    goal: GridPos,
    theta: Option<&Preference>,
    params: &RewardParams,
    horizon: u32,
) -> ValueTable {
    let n = world.map.num_cells();
    let gi = world.map.index(goal);
    let mut values = vec![0.0; n];
    let mut q = vec![f64::NEG_INFINITY; 8 * n];
    for _ in 0..horizon {
        let mut next = vec![0.0; n];
        for s in world.map.free_cells() {
            let si = world.map.index(s);
            if si == gi {
                continue;
            }
            let exit = theta.map(|t| t.exit(world.polytope_of(s)));
            let mut best = f64::NEG_INFINITY;
            for (k, a) in Action::ALL.into_iter().enumerate() {
                let Some((t, crossing)) = world.transitions.get(si, k) else {
                    continue;
                };
                let mut r = -a.length() + preference_term(crossing, exit, params);
                if t == gi {
                    r += params.goal;
                } else {
                    r += params.discount * values[t];
                }
                q[8 * si + k] = r;
                best = best.max(r);
            }
            next[si] = if best.is_finite() { best } else { 0.0 };
        }
        values = next;
    }
    ValueTable { horizon, values, q }
}
