use std::fmt;

use serde::{Deserialize, Serialize};

/// Which side of a hyperplane a point lies on: `Neg` means `n·x < c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Neg,
    Pos,
}

impl Side {
    pub fn of(value: f64) -> Side {
        if value < 0.0 {
            Side::Neg
        } else {
            Side::Pos
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Neg => Side::Pos,
            Side::Pos => Side::Neg,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Side::Neg => -1,
            Side::Pos => 1,
        }
    }
}

/// Packed ±1 vector, one entry per arrangement hyperplane.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector {
    len: usize,
    bits: Vec<u64>,
}

impl SignVector {
    pub fn all(len: usize, side: Side) -> Self {
        let fill = if side == Side::Pos { u64::MAX } else { 0 };
        let mut sv = Self {
            len,
            bits: vec![fill; len.div_ceil(64)],
        };
        sv.mask_tail();
        sv
    }

    pub fn from_sides<I: IntoIterator<Item = Side>>(sides: I) -> Self {
        let mut bits = Vec::new();
        let mut len = 0;
        for s in sides {
            if len % 64 == 0 {
                bits.push(0);
            }
            if s == Side::Pos {
                bits[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        Self { len, bits }
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.bits.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, k: usize) -> Side {
        assert!(k < self.len, "sign index {k} out of range {}", self.len);
        if self.bits[k / 64] >> (k % 64) & 1 == 1 {
            Side::Pos
        } else {
            Side::Neg
        }
    }

    pub fn set(&mut self, k: usize, side: Side) {
        assert!(k < self.len, "sign index {k} out of range {}", self.len);
        let mask = 1u64 << (k % 64);
        match side {
            Side::Pos => self.bits[k / 64] |= mask,
            Side::Neg => self.bits[k / 64] &= !mask,
        }
    }

    pub fn flipped(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.set(k, self.get(k).flip());
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = Side> + '_ {
        (0..self.len).map(move |k| self.get(k))
    }

    /// Indices where the two vectors disagree.
    pub fn diff(&self, other: &SignVector) -> Vec<usize> {
        assert_eq!(self.len, other.len);
        let mut out = Vec::new();
        for (w, (a, b)) in self.bits.iter().zip(&other.bits).enumerate() {
            let mut x = a ^ b;
            while x != 0 {
                let bit = x.trailing_zeros() as usize;
                out.push(w * 64 + bit);
                x &= x - 1;
            }
        }
        out
    }

    /// Canonical textual key: lowercase hex of the packed bits, least
    /// significant hyperplane first within each byte, bytes in index order.
    pub fn key(&self) -> String {
        let nbytes = self.len.div_ceil(8);
        let mut s = String::with_capacity(nbytes * 2);
        for i in 0..nbytes {
            let byte = (self.bits[i / 8] >> ((i % 8) * 8)) & 0xff;
            s.push_str(&format!("{byte:02x}"));
        }
        s
    }
}

impl fmt::Debug for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self
            .iter()
            .map(|s| if s == Side::Pos { '+' } else { '-' })
            .collect();
        write!(f, "SignVector({s})")
    }
}
