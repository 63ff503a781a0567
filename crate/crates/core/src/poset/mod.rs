//! Partially ordered sets over at most sixteen labeled elements.
//!
//! A [`Poset`] is the knowledge state of a comparison sort: row `j` of the
//! relation matrix is the bitmask of every `k` with `u_j <= u_k`. Rows are
//! kept reflexive and transitively closed at all times.

mod canon;

pub use canon::CanonicalCode;

use std::fmt;

use thiserror::Error;

/// Largest supported element count.
pub const MAX_ELEMENTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PosetError {
    #[error("element count {0} outside 1..={MAX_ELEMENTS}")]
    ElementCount(usize),
    #[error("element index {index} out of range for a poset on {n} elements")]
    Index { index: usize, n: usize },
    #[error("cannot compare element {0} with itself")]
    SelfComparison(usize),
    #[error("adding u{j} < u{k} contradicts the existing relation u{k} < u{j}")]
    Contradiction { j: usize, k: usize },
    #[error("relation matrix is not a partial order: {0}")]
    Invalid(&'static str),
}

/// A partial order on `u_0..u_{n-1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Poset {
    n: u8,
    rel: [u16; MAX_ELEMENTS],
}

#[inline]
fn full_mask(n: usize) -> u16 {
    if n >= 16 {
        u16::MAX
    } else {
        (1u16 << n) - 1
    }
}

fn check_count(n: usize) -> Result<(), PosetError> {
    if (1..=MAX_ELEMENTS).contains(&n) {
        Ok(())
    } else {
        Err(PosetError::ElementCount(n))
    }
}

impl Poset {
    /// The total disorder: only the reflexive pairs.
    pub fn new_antichain(n: usize) -> Result<Self, PosetError> {
        check_count(n)?;
        let mut rel = [0u16; MAX_ELEMENTS];
        for (j, row) in rel.iter_mut().enumerate().take(n) {
            *row = 1 << j;
        }
        Ok(Poset { n: n as u8, rel })
    }

    /// Builds the transitive closure of the given `(j, k)` pairs, each
    /// meaning `u_j < u_k`.
    pub fn from_relations<I>(n: usize, pairs: I) -> Result<Self, PosetError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut p = Poset::new_antichain(n)?;
        for (j, k) in pairs {
            p = p.add_relation(j, k)?;
        }
        Ok(p)
    }

    /// Wraps raw relation rows, rejecting anything that is not reflexive,
    /// antisymmetric and transitive.
    pub fn from_rows(n: usize, rows: &[u16]) -> Result<Self, PosetError> {
        check_count(n)?;
        if rows.len() != n {
            return Err(PosetError::Invalid("row count differs from n"));
        }
        let mut rel = [0u16; MAX_ELEMENTS];
        rel[..n].copy_from_slice(rows);
        let p = Poset { n: n as u8, rel };
        p.validate()?;
        Ok(p)
    }

    /// Checks the three partial-order axioms and that no bit beyond `n` is set.
    pub fn validate(&self) -> Result<(), PosetError> {
        let n = self.len();
        let full = full_mask(n);
        for j in 0..n {
            let row = self.rel[j];
            if row & !full != 0 {
                return Err(PosetError::Invalid("bit set beyond element count"));
            }
            if row & (1 << j) == 0 {
                return Err(PosetError::Invalid("not reflexive"));
            }
            for k in bits(row) {
                if k != j && self.rel[k] & (1 << j) != 0 {
                    return Err(PosetError::Invalid("not antisymmetric"));
                }
                if self.rel[k] & !row != 0 {
                    return Err(PosetError::Invalid("not transitive"));
                }
            }
        }
        if self.rel[n..].iter().any(|&r| r != 0) {
            return Err(PosetError::Invalid("rows set beyond element count"));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Relation rows `0..n`; row `j` holds every `k` with `u_j <= u_k`.
    #[inline]
    pub fn rows(&self) -> &[u16] {
        &self.rel[..self.len()]
    }

    /// Mask with one bit per element.
    #[inline]
    pub fn universe(&self) -> u16 {
        full_mask(self.len())
    }

    /// True iff `u_j <= u_k`.
    #[inline]
    pub fn is_related(&self, j: usize, k: usize) -> bool {
        self.rel[j] & (1 << k) != 0
    }

    #[inline]
    pub fn comparable(&self, j: usize, k: usize) -> bool {
        self.is_related(j, k) || self.is_related(k, j)
    }

    /// Strict successors of `u_j`.
    #[inline]
    pub fn above(&self, j: usize) -> u16 {
        self.rel[j] & !(1 << j)
    }

    /// Strict predecessors of `u_j`.
    pub fn below(&self, j: usize) -> u16 {
        let bit = 1u16 << j;
        let mut mask = 0;
        for (i, &row) in self.rows().iter().enumerate() {
            if i != j && row & bit != 0 {
                mask |= 1 << i;
            }
        }
        mask
    }

    /// Strict predecessor masks for every element at once.
    pub fn below_all(&self) -> [u16; MAX_ELEMENTS] {
        let mut cols = [0u16; MAX_ELEMENTS];
        for (i, &row) in self.rows().iter().enumerate() {
            for k in bits(row & !(1 << i)) {
                cols[k] |= 1 << i;
            }
        }
        cols
    }

    fn check_index(&self, j: usize) -> Result<(), PosetError> {
        if j < self.len() {
            Ok(())
        } else {
            Err(PosetError::Index {
                index: j,
                n: self.len(),
            })
        }
    }

    /// `P + u_j u_k`: the closure of the relation after learning `u_j < u_k`.
    ///
    /// Returns the poset unchanged when the pair is already related that way.
    pub fn add_relation(&self, j: usize, k: usize) -> Result<Self, PosetError> {
        self.check_index(j)?;
        self.check_index(k)?;
        if j == k {
            return Err(PosetError::SelfComparison(j));
        }
        if self.is_related(j, k) {
            return Ok(*self);
        }
        if self.is_related(k, j) {
            return Err(PosetError::Contradiction { j, k });
        }
        Ok(self.add_unrelated(j, k))
    }

    /// Same as [`Poset::add_relation`] for a pair known to be incomparable.
    #[inline]
    pub fn add_unrelated(&self, j: usize, k: usize) -> Self {
        debug_assert!(!self.comparable(j, k));
        let mut out = *self;
        let up = self.rel[k];
        let bit = 1u16 << j;
        for row in out.rel[..self.len()].iter_mut() {
            if *row & bit != 0 {
                *row |= up;
            }
        }
        out
    }

    /// Reverses every pair.
    pub fn dual(&self) -> Self {
        let mut rel = [0u16; MAX_ELEMENTS];
        for (i, &row) in self.rows().iter().enumerate() {
            for k in bits(row) {
                rel[k] |= 1 << i;
            }
        }
        Poset { n: self.n, rel }
    }

    /// Renames element `i` to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len(), "permutation length");
        let mut rel = [0u16; MAX_ELEMENTS];
        for (i, &row) in self.rows().iter().enumerate() {
            rel[perm[i]] = remap(row, perm);
        }
        Poset { n: self.n, rel }
    }

    pub fn canonical_code(&self) -> CanonicalCode {
        canon::canonical_code(self)
    }

    /// Key identifying a poset up to isomorphism and duality.
    pub fn dedup_key(&self) -> CanonicalCode {
        let a = self.canonical_code();
        let b = self.dual().canonical_code();
        a.min(b)
    }

    /// Number of elements compared with at least one other element.
    pub fn touched_count(&self) -> usize {
        let mut touched = 0u16;
        for (j, &row) in self.rows().iter().enumerate() {
            let strict = row & !(1 << j);
            if strict != 0 {
                touched |= strict | (1 << j);
            }
        }
        touched.count_ones() as usize
    }

    /// Appends `m` elements unrelated to everything.
    pub fn add_isolated(&self, m: usize) -> Result<Self, PosetError> {
        let n = self.len() + m;
        check_count(n)?;
        let mut out = *self;
        for j in self.len()..n {
            out.rel[j] = 1 << j;
        }
        out.n = n as u8;
        Ok(out)
    }

    /// True when every pair is comparable.
    pub fn is_linear(&self) -> bool {
        let full = self.universe();
        let below = self.below_all();
        self.rows()
            .iter()
            .zip(below.iter())
            .all(|(&up, &down)| up | down == full)
    }

    /// Incomparable pairs `(j, k)` with `j < k`.
    pub fn unrelated_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |j| {
            (j + 1..n)
                .filter(move |&k| !self.comparable(j, k))
                .map(move |k| (j, k))
        })
    }

    /// Cover relations `(j, k)`: `u_j < u_k` with nothing strictly between.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.len() {
            let above = self.above(j);
            let mut implied = 0u16;
            for m in bits(above) {
                implied |= self.above(m);
            }
            for k in bits(above & !implied) {
                out.push((j, k));
            }
        }
        out
    }
}

impl fmt::Debug for Poset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Poset")
            .field("n", &self.n)
            .field("covers", &self.covers())
            .finish()
    }
}

/// Iterates set bit positions, lowest first.
#[inline]
pub(crate) fn bits(mut mask: u16) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(b)
        }
    })
}

#[inline]
fn remap(row: u16, perm: &[usize]) -> u16 {
    bits(row).fold(0u16, |acc, b| acc | (1 << perm[b]))
}
