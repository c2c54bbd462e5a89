//! Two-variable linear programs solved by randomized incremental
//! construction.
//!
//! Constraints are processed in a seeded random order. Whenever the current
//! optimum violates the next constraint, the new optimum is found by a
//! one-dimensional LP along that constraint's boundary line. A large
//! artificial box keeps every intermediate problem bounded; unboundedness is
//! detected by re-solving with a larger box.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, HalfPlane, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_lp2d`]. `point` and `value` are meaningful only when
/// `status` is [`LpStatus::Optimal`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub point: Point,
    pub value: f64,
}

impl LpSolution {
    fn infeasible() -> Self {
        Self {
            status: LpStatus::Infeasible,
            point: [f64::NAN; 2],
            value: f64::NEG_INFINITY,
        }
    }

    fn unbounded() -> Self {
        Self {
            status: LpStatus::Unbounded,
            point: [f64::NAN; 2],
            value: f64::INFINITY,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solver configuration.
#[derive(Clone, Copy, Debug)]
pub struct Lp2d {
    /// Feasibility tolerance on `n·x - c` for normalized half-planes.
    pub tolerance: f64,
    /// Seed for the constraint insertion order.
    pub seed: u64,
}

impl Default for Lp2d {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            seed: 0x5eed_1b2d,
        }
    }
}

/// Maximizes `objective·x` subject to every half-plane in `constraints`.
pub fn solve_lp2d(objective: Point, constraints: &[HalfPlane]) -> LpSolution {
    Lp2d::default().solve(objective, constraints)
}

impl Lp2d {
    pub fn solve(&self, objective: Point, constraints: &[HalfPlane]) -> LpSolution {
        let scale = constraints
            .iter()
            .fold(1.0f64, |m, h| m.max(h.offset().abs()));
        let big = 1e6 * scale;
        let first = self.solve_boxed(objective, constraints, big);
        if !first.is_optimal() {
            return first;
        }
        let touches_box = first.point.iter().any(|v| v.abs() >= big * (1.0 - 1e-9));
        if !touches_box {
            return first;
        }
        let second = self.solve_boxed(objective, constraints, 2.0 * big);
        if second.value > first.value + self.tolerance * (1.0 + first.value.abs()) {
            LpSolution::unbounded()
        } else {
            first
        }
    }

    fn solve_boxed(&self, c: Point, constraints: &[HalfPlane], big: f64) -> LpSolution {
        let corner = |v: f64| {
            if v > 0.0 {
                big
            } else if v < 0.0 {
                -big
            } else {
                0.0
            }
        };
        let mut x = [corner(c[0]), corner(c[1])];

        let mut active: Vec<HalfPlane> = Vec::with_capacity(constraints.len() + 4);
        active.extend([
            HalfPlane::new([1.0, 0.0], big).expect("box"),
            HalfPlane::new([-1.0, 0.0], big).expect("box"),
            HalfPlane::new([0.0, 1.0], big).expect("box"),
            HalfPlane::new([0.0, -1.0], big).expect("box"),
        ]);

        let mut order: Vec<usize> = (0..constraints.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));

        for i in order {
            let h = constraints[i];
            if h.eval(x) > self.tolerance {
                match self.optimize_on_line(c, &h, &active) {
                    Some(p) => x = p,
                    None => return LpSolution::infeasible(),
                }
            }
            active.push(h);
        }
        LpSolution {
            status: LpStatus::Optimal,
            point: x,
            value: dot(c, x),
        }
    }

    /// One-dimensional LP along the boundary of `h`, subject to `active`.
    fn optimize_on_line(&self, c: Point, h: &HalfPlane, active: &[HalfPlane]) -> Option<Point> {
        let a = h.normal();
        let aa = dot(a, a);
        let base = [a[0] * h.offset() / aa, a[1] * h.offset() / aa];
        let norm = aa.sqrt();
        let dir = [-a[1] / norm, a[0] / norm];

        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for g in active {
            let den = dot(g.normal(), dir);
            let rhs = g.offset() - dot(g.normal(), base);
            if den.abs() <= 1e-12 {
                if rhs < -self.tolerance {
                    return None;
                }
                continue;
            }
            let t = rhs / den;
            if den > 0.0 {
                hi = hi.min(t);
            } else {
                lo = lo.max(t);
            }
        }
        if lo > hi {
            if lo - hi > self.tolerance {
                return None;
            }
            let mid = 0.5 * (lo + hi);
            lo = mid;
            hi = mid;
        }
        let slope = dot(c, dir);
        let t = if slope > 1e-15 {
            hi
        } else if slope < -1e-15 {
            lo
        } else {
            0.0f64.clamp(lo, hi)
        };
        Some([base[0] + t * dir[0], base[1] + t * dir[1]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(n: Point, c: f64) -> HalfPlane {
        HalfPlane::new(n, c).unwrap()
    }

    #[test]
    fn unit_box_maximize_x() {
        let cons = [
            hp([1.0, 0.0], 1.0),
            hp([0.0, 1.0], 1.0),
            hp([-1.0, 0.0], 0.0),
            hp([0.0, -1.0], 0.0),
        ];
        let sol = solve_lp2d([1.0, 0.0], &cons);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let cons = [hp([1.0, 0.0], 1.0), hp([-1.0, 0.0], -2.0)];
        assert_eq!(solve_lp2d([1.0, 0.0], &cons).status, LpStatus::Infeasible);
    }

    #[test]
    fn open_direction_is_unbounded() {
        let cons = [hp([-1.0, 0.0], 0.0), hp([0.0, 1.0], 1.0)];
        assert_eq!(solve_lp2d([1.0, 0.0], &cons).status, LpStatus::Unbounded);
        // bounded value along an unbounded face
        let sol = solve_lp2d([0.0, 1.0], &cons);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_objective_returns_a_feasible_point() {
        let cons = [
            hp([1.0, 1.0], 3.0),
            hp([-1.0, 0.0], -1.0),
            hp([0.0, -1.0], -1.0),
        ];
        let sol = solve_lp2d([0.0, 0.0], &cons);
        assert!(sol.is_optimal());
        assert!(cons.iter().all(|h| h.eval(sol.point) <= 1e-9));
    }

    #[test]
    fn solution_independent_of_seed() {
        let cons: Vec<_> = (0..12)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 12.0;
                hp([a.cos(), a.sin()], 2.0 + 0.1 * k as f64)
            })
            .collect();
        let base = solve_lp2d([0.3, 1.0], &cons).value;
        for seed in 0..10 {
            let v = Lp2d {
                seed,
                ..Lp2d::default()
            }
            .solve([0.3, 1.0], &cons)
            .value;
            assert!((v - base).abs() < 1e-9);
        }
    }
}
