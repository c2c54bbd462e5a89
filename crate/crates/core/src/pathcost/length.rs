use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::worldgraph::Action;

/// Exact octile path length `straight + diagonal·√2`.
///
/// Comparisons are exact, so A* and Dijkstra agree to the last bit and tie
/// breaking is reproducible.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathLength {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathLength {
    pub const ZERO: PathLength = PathLength {
        straight: 0,
        diagonal: 0,
    };
    pub const INFINITE: PathLength = PathLength {
        straight: u32::MAX,
        diagonal: u32::MAX,
    };

    pub const fn new(straight: u32, diagonal: u32) -> Self {
        Self { straight, diagonal }
    }

    pub fn step(a: Action) -> Self {
        if a.is_diagonal() {
            Self::new(0, 1)
        } else {
            Self::new(1, 0)
        }
    }

    /// Octile distance between grid offsets on an empty grid.
    pub fn octile(dx: i32, dy: i32) -> Self {
        let (dx, dy) = (dx.unsigned_abs(), dy.unsigned_abs());
        Self::new(dx.max(dy) - dx.min(dy), dx.min(dy))
    }

    pub fn is_finite(self) -> bool {
        self != Self::INFINITE
    }

    pub fn value(self) -> f64 {
        if self.is_finite() {
            self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
        } else {
            f64::INFINITY
        }
    }
}

impl Add for PathLength {
    type Output = PathLength;

    fn add(self, rhs: PathLength) -> PathLength {
        if !self.is_finite() || !rhs.is_finite() {
            return PathLength::INFINITE;
        }
        PathLength::new(self.straight + rhs.straight, self.diagonal + rhs.diagonal)
    }
}

impl Ord for PathLength {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_finite(), other.is_finite()) {
            (false, false) => return Ordering::Equal,
            (false, true) => return Ordering::Greater,
            (true, false) => return Ordering::Less,
            _ => {}
        }
        // sign of ds + dd·√2
        let ds = self.straight as i64 - other.straight as i64;
        let dd = self.diagonal as i64 - other.diagonal as i64;
        match (ds.signum(), dd.signum()) {
            (0, 0) => Ordering::Equal,
            (a, b) if a >= 0 && b >= 0 => Ordering::Greater,
            (a, b) if a <= 0 && b <= 0 => Ordering::Less,
            (1, _) => (ds as i128 * ds as i128).cmp(&(2 * dd as i128 * dd as i128)),
            _ => (2 * dd as i128 * dd as i128).cmp(&(ds as i128 * ds as i128)),
        }
    }
}

impl PartialOrd for PathLength {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for PathLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}+{}√2", self.straight, self.diagonal)
        } else {
            f.write_str("∞")
        }
    }
}

impl fmt::Display for PathLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn infinity_dominates() {
        assert!(PathLength::INFINITE > PathLength::new(1000, 1000));
        assert_eq!(
            PathLength::INFINITE + PathLength::new(1, 0),
            PathLength::INFINITE
        );
        assert_eq!(PathLength::INFINITE.value(), f64::INFINITY);
    }

    #[test]
    fn close_values_compare_exactly() {
        // 3√2 ≈ 4.2426 vs 4 + 0 and 7 vs 5√2 ≈ 7.0711
        assert!(PathLength::new(0, 3) > PathLength::new(4, 0));
        assert!(PathLength::new(7, 0) < PathLength::new(0, 5));
        // 29√2 ≈ 41.012
        assert!(PathLength::new(41, 0) < PathLength::new(0, 29));
        assert!(PathLength::new(42, 0) > PathLength::new(0, 29));
    }

    proptest! {
        #[test]
        fn order_agrees_with_float_value(a in 0u32..500, b in 0u32..500, c in 0u32..500, d in 0u32..500) {
            let (x, y) = (PathLength::new(a, b), PathLength::new(c, d));
            let (fx, fy) = (x.value(), y.value());
            if (fx - fy).abs() > 1e-9 {
                prop_assert_eq!(x.cmp(&y), fx.partial_cmp(&fy).unwrap());
            }
            prop_assert_eq!(x.cmp(&y), y.cmp(&x).reverse());
        }
    }
}
