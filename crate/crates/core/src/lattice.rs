//! Truncated mode lattices `{a : |a_i| <= K}` over `Z^d` or `N^d`.
//!
//! Modes are stored densely in lexicographic order, so a lattice index is a
//! mixed-radix encoding of the coordinates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 3;

/// A lattice point `a ∈ Z^d`. Unused trailing coordinates are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode {
    coords: [i32; MAX_DIM],
    dim: u8,
}

impl Mode {
    /// # Panics
    /// Panics when `coords` is empty or longer than [`MAX_DIM`].
    pub fn new(coords: &[i32]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "mode dimension must be in 1..={MAX_DIM}"
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Mode {
            coords: c,
            dim: coords.len() as u8,
        }
    }

    pub fn d1(a: i32) -> Self {
        Mode::new(&[a])
    }

    pub fn zero(dim: usize) -> Self {
        Mode::new(&vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    /// `a_1^2 + ... + a_d^2`
    pub fn norm_sq(&self) -> i64 {
        self.coords.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    /// `|a|_w^2 = max(1, a_1^2 + ... + a_d^2)`
    pub fn weight_sq(&self) -> i64 {
        self.norm_sq().max(1)
    }

    /// `|a|_w = sqrt(max(1, a_1^2 + ... + a_d^2))`
    pub fn weight(&self) -> f64 {
        (self.weight_sq() as f64).sqrt()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coords().iter().all(|&c| c >= 0)
    }

    pub fn negative_coords(&self) -> usize {
        self.coords().iter().filter(|&&c| c < 0).count()
    }

    pub fn scaled(&self, k: i32) -> Mode {
        let mut m = *self;
        for c in m.coords.iter_mut() {
            *c *= k;
        }
        m
    }

    pub fn add(&self, other: &Mode) -> Mode {
        debug_assert_eq!(self.dim, other.dim);
        let mut m = *self;
        for (c, o) in m.coords.iter_mut().zip(other.coords.iter()) {
            *c += *o;
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }
}

impl fmt::Debug for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "{}", self.coords[0])
        } else {
            write!(f, "(")?;
            for (i, c) in self.coords().iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")
        }
    }
}

/// Whether the index set is `Z^d` or `N^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Full,
    Half,
}

/// The stored mode box of a truncated lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModeLattice {
    dim: usize,
    kind: LatticeKind,
    cutoff: usize,
}

impl ModeLattice {
    pub fn new(dim: usize, kind: LatticeKind, cutoff: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::domain(format!("lattice dimension {dim} outside 1..={MAX_DIM}")));
        }
        if cutoff == 0 {
            return Err(Error::domain("lattice cutoff must be positive"));
        }
        if cutoff > i32::MAX as usize / 4 {
            return Err(Error::domain("lattice cutoff too large"));
        }
        Ok(ModeLattice { dim, kind, cutoff })
    }

    pub fn full(dim: usize, cutoff: usize) -> Result<Self> {
        Self::new(dim, LatticeKind::Full, cutoff)
    }

    pub fn half(dim: usize, cutoff: usize) -> Result<Self> {
        Self::new(dim, LatticeKind::Half, cutoff)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of stored coordinate values per axis.
    pub fn side(&self) -> usize {
        match self.kind {
            LatticeKind::Full => 2 * self.cutoff + 1,
            LatticeKind::Half => self.cutoff + 1,
        }
    }

    fn coord_min(&self) -> i64 {
        match self.kind {
            LatticeKind::Full => -(self.cutoff as i64),
            LatticeKind::Half => 0,
        }
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, mode: &Mode) -> bool {
        let lo = self.coord_min();
        let hi = self.cutoff as i64;
        mode.dim() == self.dim && mode.coords().iter().all(|&c| (c as i64) >= lo && (c as i64) <= hi)
    }

    pub fn index_of(&self, mode: &Mode) -> Option<usize> {
        if !self.contains(mode) {
            return None;
        }
        let side = self.side() as i64;
        let lo = self.coord_min();
        let idx = mode.coords().iter().fold(0i64, |acc, &c| acc * side + (c as i64 - lo));
        Some(idx as usize)
    }

    /// # Panics
    /// Panics when `index >= self.len()`.
    pub fn mode_at(&self, index: usize) -> Mode {
        assert!(index < self.len(), "lattice index out of range");
        let side = self.side();
        let lo = self.coord_min();
        let mut coords = [0i32; MAX_DIM];
        let mut rest = index;
        for axis in (0..self.dim).rev() {
            coords[axis] = ((rest % side) as i64 + lo) as i32;
            rest /= side;
        }
        Mode::new(&coords[..self.dim])
    }

    /// All stored modes in lexicographic order.
    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.len()).map(move |i| self.mode_at(i))
    }

    /// `|a|_w` for a stored mode.
    pub fn mode_weight(&self, mode: &Mode) -> Result<f64> {
        if !self.contains(mode) {
            return Err(Error::domain(format!("mode {mode} outside lattice")));
        }
        Ok(mode.weight())
    }
}
