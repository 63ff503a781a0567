//! Recursive sortability with memoization.

use std::cell::RefCell;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};

use super::CandidateSet;
use crate::linext::{count_all_pairs, DownsetTable, PairTable};
use crate::poset::{CanonicalCode, Poset};

thread_local! {
    static SCRATCH: RefCell<DownsetTable> = RefCell::new(DownsetTable::new(0));
}

/// Runs `f` with this thread's downset table.
pub(crate) fn with_counter<R>(f: impl FnOnce(&mut DownsetTable) -> R) -> R {
    SCRATCH.with(|t| f(&mut t.borrow_mut()))
}

pub(crate) fn pair_table(p: &Poset) -> PairTable {
    with_counter(|t| count_all_pairs(p, t))
}

/// `2^r`, saturating.
#[inline]
pub(crate) fn capacity(r: usize) -> u64 {
    if r >= 63 {
        u64::MAX
    } else {
        1 << r
    }
}

/// Restricts the number of touched elements after a given number of
/// comparisons to `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TouchBound {
    pub step: usize,
    pub lo: usize,
    pub hi: usize,
}

impl TouchBound {
    /// Whether a poset reached after `step` comparisons is admissible.
    /// A sort that already finished before the bounded step has touched
    /// everything it ever will, so linear posets are checked early too.
    pub fn admits(&self, p: &Poset, step: usize) -> bool {
        if step == self.step || (step < self.step && p.is_linear()) {
            (self.lo..=self.hi).contains(&p.touched_count())
        } else {
            true
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Known {
    /// largest budget known to be insufficient
    max_false: Option<u8>,
    /// smallest budget known to suffice
    min_true: Option<u8>,
}

/// Memo of `(dedup key, remaining comparisons) -> sortable`.
///
/// Stored per key as the largest failing and smallest succeeding budget, so
/// answers for every other budget follow by monotonicity. Concurrent inserts
/// may race; a lost update only costs recomputation.
#[derive(Default)]
pub struct SortabilityCache {
    map: DashMap<CanonicalCode, Known>,
}

impl SortabilityCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, key: &CanonicalCode, r: usize) -> Option<bool> {
        let k = self.map.get(key)?;
        if k.min_true.is_some_and(|t| r >= t as usize) {
            return Some(true);
        }
        if k.max_false.is_some_and(|f| r <= f as usize) {
            return Some(false);
        }
        None
    }

    pub fn insert(&self, key: CanonicalCode, r: usize, sortable: bool) {
        let r = r.min(u8::MAX as usize) as u8;
        let mut entry = self.map.entry(key).or_insert(Known {
            max_false: None,
            min_true: None,
        });
        if sortable {
            entry.min_true = Some(entry.min_true.map_or(r, |t| t.min(r)));
        } else {
            entry.max_false = Some(entry.max_false.map_or(r, |f| f.max(r)));
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// A comparison tree that sorts a given poset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecisionTree {
    Sorted,
    Compare {
        j: usize,
        k: usize,
        /// subtree after learning `u_j < u_k`
        less: Box<DecisionTree>,
        /// subtree after learning `u_k < u_j`
        greater: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Sorted => 0,
            DecisionTree::Compare { less, greater, .. } => 1 + less.depth().max(greater.depth()),
        }
    }
}

/// One comparison worth trying: both outcomes fit the remaining budget.
pub(crate) struct Branching {
    pub j: usize,
    pub k: usize,
    pub less: Poset,
    pub greater: Poset,
    pub less_e: u64,
    pub greater_e: u64,
}

/// Comparisons whose both outcomes have at most `limit` extensions, most
/// lopsided first. A pair is skipped when swapping one of its elements with
/// a lower-indexed twin gives another pair with isomorphic outcomes.
pub(crate) fn branchings(p: &Poset, pt: &PairTable, limit: u64) -> Vec<Branching> {
    let n = p.len();
    let below = p.below_all();
    let mut lower_twins = [0u16; crate::MAX_ELEMENTS];
    for x in 0..n {
        for y in 0..x {
            if p.rows()[x] & !(1 << x) == p.rows()[y] & !(1 << y)
                && below[x] & !(1 << x) == below[y] & !(1 << y)
            {
                lower_twins[x] |= 1 << y;
            }
        }
    }
    let mut out: Vec<Branching> = p
        .unrelated_pairs()
        .filter(|&(j, k)| lower_twins[j] == 0 && lower_twins[k] & !(1 << j) == 0)
        .filter_map(|(j, k)| {
            let (less_e, greater_e) = (pt.get(j, k), pt.get(k, j));
            (less_e <= limit && greater_e <= limit).then(|| Branching {
                j,
                k,
                less: p.add_unrelated(j, k),
                greater: p.add_unrelated(k, j),
                less_e,
                greater_e,
            })
        })
        .collect();
    out.sort_by_key(|b| std::cmp::Reverse(b.less_e.max(b.greater_e)));
    out
}

impl Branching {
    /// The outcome a forward step records: the one with more extensions,
    /// or on a tie the one with the smaller key. Returns it with its key,
    /// its extension count and the other outcome.
    pub(crate) fn stored(&self) -> (CanonicalCode, u64, &Poset) {
        if self.less_e > self.greater_e {
            (self.less.dedup_key(), self.less_e, &self.greater)
        } else if self.greater_e > self.less_e {
            (self.greater.dedup_key(), self.greater_e, &self.less)
        } else {
            let (kl, kg) = (self.less.dedup_key(), self.greater.dedup_key());
            if kl <= kg {
                (kl, self.less_e, &self.greater)
            } else {
                (kg, self.greater_e, &self.less)
            }
        }
    }
}

/// Exact sortability oracle for one search run: knows the total budget so
/// that a touch bound can be applied at the right depth.
pub struct Sorter<'a> {
    budget: usize,
    touch: Option<TouchBound>,
    cache: Option<&'a SortabilityCache>,
    settled: Option<Settled<'a>>,
}

/// Levels a backward pass has finished: for every step `s >= first`, the
/// forward set `S_s` and its sortable part `S*_s`. A poset met at such a
/// step that lies in `S_s` is sortable exactly when it lies in `S*_s`.
#[derive(Clone, Copy)]
pub(crate) struct Settled<'a> {
    pub first: usize,
    /// indexed by step
    pub forward: &'a [CandidateSet],
    /// `S*_C`, `S*_{C-1}`, ..., `S*_first`
    pub star: &'a [CandidateSet],
}

impl Settled<'_> {
    fn lookup(&self, key: &CanonicalCode, step: usize) -> Option<bool> {
        if step < self.first {
            return None;
        }
        let star = &self.star[self.star.len() - 1 - (step - self.first)];
        debug_assert_eq!(star.step, step);
        self.forward[step].contains(key).then(|| star.contains(key))
    }
}

impl<'a> Sorter<'a> {
    pub fn new(
        budget: usize,
        touch: Option<TouchBound>,
        cache: Option<&'a SortabilityCache>,
    ) -> Self {
        Sorter {
            budget,
            touch,
            cache,
            settled: None,
        }
    }

    pub(crate) fn with_settled(mut self, settled: Settled<'a>) -> Self {
        self.settled = Some(settled);
        self
    }

    fn admits(&self, p: &Poset, r: usize) -> bool {
        match (&self.touch, self.budget.checked_sub(r)) {
            (Some(t), Some(step)) => t.admits(p, step),
            _ => true,
        }
    }

    /// Whether `p` can be sorted with at most `r` more comparisons.
    pub fn is_sortable(&self, p: &Poset, r: usize) -> bool {
        self.is_sortable_keyed(p, None, r)
    }

    pub(crate) fn is_sortable_keyed(
        &self,
        p: &Poset,
        key: Option<CanonicalCode>,
        r: usize,
    ) -> bool {
        if !self.admits(p, r) {
            return false;
        }
        if p.is_linear() {
            return true;
        }
        if r == 0 {
            return false;
        }
        let step = self.budget.checked_sub(r);
        let settled = self.settled.filter(|s| step.is_some_and(|c| c >= s.first));
        let key = match (self.cache.is_some() || settled.is_some(), key) {
            (false, _) => None,
            (true, Some(k)) => Some(k),
            (true, None) => Some(p.dedup_key()),
        };
        if let (Some(settled), Some(key), Some(step)) = (settled, key.as_ref(), step) {
            if let Some(known) = settled.lookup(key, step) {
                return known;
            }
        }
        if let (Some(cache), Some(key)) = (self.cache, key.as_ref()) {
            if let Some(known) = cache.lookup(key, r) {
                return known;
            }
        }
        let answer = self.search(p, r);
        if let (Some(cache), Some(key)) = (self.cache, key) {
            cache.insert(key, r, answer);
        }
        answer
    }

    fn search(&self, p: &Poset, r: usize) -> bool {
        let pt = pair_table(p);
        if pt.total() > capacity(r) {
            return false;
        }
        for b in branchings(p, &pt, capacity(r - 1)) {
            let (first, second) = if b.less_e >= b.greater_e {
                (&b.less, &b.greater)
            } else {
                (&b.greater, &b.less)
            };
            if self.is_sortable_keyed(first, None, r - 1)
                && self.is_sortable_keyed(second, None, r - 1)
            {
                return true;
            }
        }
        false
    }

    /// A sorting tree of depth at most `r`, if one exists.
    pub fn decision_tree(&self, p: &Poset, r: usize) -> Option<DecisionTree> {
        if !self.is_sortable(p, r) {
            return None;
        }
        if p.is_linear() {
            return Some(DecisionTree::Sorted);
        }
        let pt = pair_table(p);
        for b in branchings(p, &pt, capacity(r - 1)) {
            if self.is_sortable(&b.less, r - 1) && self.is_sortable(&b.greater, r - 1) {
                let less = self.decision_tree(&b.less, r - 1)?;
                let greater = self.decision_tree(&b.greater, r - 1)?;
                return Some(DecisionTree::Compare {
                    j: b.j,
                    k: b.k,
                    less: Box::new(less),
                    greater: Box::new(greater),
                });
            }
        }
        None
    }
}

/// Whether `p` can be sorted in `r` comparisons, with no touch bound.
pub fn is_sortable(p: &Poset, r: usize, cache: Option<&SortabilityCache>) -> bool {
    Sorter::new(r, None, cache).is_sortable(p, r)
}
