//! Signed multi-indices `j = ((a_1, δ_1), .., (a_r, δ_r))` naming the
//! monomials `z_j = z_{j_1} ⋯ z_{j_r}` with `z_{(a,+1)} = ξ_a` and
//! `z_{(a,-1)} = η_a`.
//!
//! Entries are kept sorted by `(|a|_w, a, δ)`, so indices that differ by a
//! permutation compare equal.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Minus => -1,
            Sign::Plus => 1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }

    pub fn from_value(v: i64) -> Result<Sign> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::domain(format!("sign must be +1 or -1, got {v}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Entry {
    pub mode: Mode,
    pub sign: Sign,
}

impl Entry {
    pub fn new(mode: Mode, sign: Sign) -> Self {
        Entry { mode, sign }
    }

    pub fn plus(mode: Mode) -> Self {
        Entry::new(mode, Sign::Plus)
    }

    pub fn minus(mode: Mode) -> Self {
        Entry::new(mode, Sign::Minus)
    }

    fn key(&self) -> (i64, Mode, Sign) {
        (self.mode.weight_sq(), self.mode, self.sign)
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        };
        write!(f, "{}:{s}", self.mode)
    }
}

/// A canonical multi-index; length at least 1, all modes of one dimension.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<Entry>,
}

impl MultiIndex {
    pub fn new(mut entries: Vec<Entry>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::domain("multi-index needs at least one entry"));
        };
        let dim = first.mode.dim();
        if entries.iter().any(|e| e.mode.dim() != dim) {
            return Err(Error::domain("multi-index entries have mixed dimensions"));
        }
        entries.sort_unstable();
        Ok(MultiIndex { entries })
    }

    /// One-dimensional index from `(a, δ)` pairs with `δ = ±1`.
    ///
    /// # Panics
    /// Panics on an empty list or a sign other than `±1`.
    pub fn d1(pairs: &[(i32, i32)]) -> Self {
        let entries = pairs
            .iter()
            .map(|&(a, d)| Entry::new(Mode::d1(a), Sign::from_value(d as i64).expect("sign")))
            .collect();
        MultiIndex::new(entries).expect("nonempty multi-index")
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.entries[0].mode.dim()
    }

    /// `ℳ(j) = Σ δ_i a_i`
    pub fn moment(&self) -> Mode {
        self.entries
            .iter()
            .fold(Mode::zero(self.dim()), |acc, e| acc.add(&e.mode.scaled(e.sign.value())))
    }

    pub fn has_zero_moment(&self) -> bool {
        self.moment().is_zero()
    }

    /// `j̄`: every sign flipped.
    pub fn conjugate(&self) -> MultiIndex {
        let entries = self.entries.iter().map(|e| Entry::new(e.mode, e.sign.flip())).collect();
        MultiIndex::new(entries).expect("conjugate of a valid index")
    }

    /// True iff the entries pair up as `(a,+1)/(a,-1)`, i.e. `z_j` is a
    /// product of actions.
    pub fn is_action_type(&self) -> bool {
        if !self.len().is_multiple_of(2) {
            return false;
        }
        let mut plus: Vec<Mode> = Vec::new();
        let mut minus: Vec<Mode> = Vec::new();
        for e in &self.entries {
            match e.sign {
                Sign::Plus => plus.push(e.mode),
                Sign::Minus => minus.push(e.mode),
            }
        }
        plus == minus
    }

    /// Weights `|a_i|_w`, largest first.
    pub fn weights_desc(&self) -> Vec<f64> {
        let mut w: Vec<f64> = self.entries.iter().map(|e| e.mode.weight()).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        w
    }

    pub fn max_weight(&self) -> f64 {
        self.entries.last().map(|e| e.mode.weight()).unwrap_or(1.0)
    }

    pub fn count_minus(&self) -> usize {
        self.entries.iter().filter(|e| e.sign == Sign::Minus).count()
    }

    pub fn negative_coords(&self) -> usize {
        self.entries.iter().map(|e| e.mode.negative_coords()).sum()
    }

    /// Index with one occurrence of `entry` removed, or `None` if absent or
    /// if nothing would remain.
    pub fn without(&self, entry: &Entry) -> Option<MultiIndex> {
        let pos = self.entries.iter().position(|e| e == entry)?;
        if self.len() == 1 {
            return None;
        }
        let mut entries = self.entries.clone();
        entries.remove(pos);
        Some(MultiIndex { entries })
    }

    /// Multiplicity of `entry` in the index.
    pub fn multiplicity(&self, entry: &Entry) -> usize {
        self.entries.iter().filter(|e| *e == entry).count()
    }

    /// Concatenation, i.e. the index of the product monomial.
    pub fn concat(&self, other: &MultiIndex) -> Result<MultiIndex> {
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        MultiIndex::new(entries)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

/// Parses the display form, e.g. `1:+1;1:+1;2:-1` or `(1 0):+1;(0 1):-1`.
impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("bad multi-index `{s}`: {what}"));
        let entries = s
            .split(';')
            .map(|part| {
                let (mode, sign) = part.trim().rsplit_once(':').ok_or_else(|| bad("missing `:`"))?;
                let coords = mode
                    .trim_matches(|c| c == '(' || c == ')')
                    .split_whitespace()
                    .map(|c| c.parse::<i32>().map_err(|_| bad("coordinate")))
                    .collect::<Result<Vec<_>>>()?;
                if coords.is_empty() || coords.len() > crate::lattice::MAX_DIM {
                    return Err(bad("dimension"));
                }
                let sign: i64 = sign.trim().parse().map_err(|_| bad("sign"))?;
                Ok(Entry::new(
                    Mode::new(&coords),
                    Sign::from_value(sign).map_err(|_| bad("sign"))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        MultiIndex::new(entries)
    }
}
