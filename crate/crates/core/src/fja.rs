//! Merge insertion (Ford–Johnson) sorting and comparison-count bounds.

use std::cmp::Ordering;

use serde::Serialize;

use crate::poset::{Poset, PosetError};

/// Largest `n` for which [`itlb`] is exact in 128-bit arithmetic.
pub const ITLB_MAX_N: usize = 22;

/// `ceil(log2(n!))`, the information-theoretic lower bound on the number of
/// comparisons needed to sort `n` elements.
///
/// # Panics
/// Panics for `n > 22`, where `n!` no longer fits the exact integer path.
pub fn itlb(n: usize) -> u32 {
    assert!(n <= ITLB_MAX_N, "itlb is exact only up to n = {ITLB_MAX_N}");
    let fact: u128 = (1..=n as u128).product();
    ceil_log2(fact)
}

/// `ceil(log2(x))` for `x >= 1`.
pub fn ceil_log2(x: u128) -> u32 {
    assert!(x >= 1);
    if x == 1 {
        0
    } else {
        128 - (x - 1).leading_zeros()
    }
}

/// `F(n)`: worst-case comparisons of merge insertion,
/// the sum of `ceil(log2(3k/4))` over `k = 1..=n`.
pub fn fja_worst_case(n: usize) -> u64 {
    (1..=n as u64)
        .map(|k| {
            // smallest t with 2^t >= 3k/4, i.e. 2^(t+2) >= 3k
            let mut t = 0u32;
            while (4u64 << t) < 3 * k {
                t += 1;
            }
            t as u64
        })
        .sum()
}

/// Sorts by merge insertion, calling `less(a, b)` for every comparison.
/// Returns the sorted items and the number of comparisons made.
pub fn fja_sort_by<T, F>(items: Vec<T>, mut less: F) -> (Vec<T>, u64)
where
    F: FnMut(&T, &T) -> bool,
{
    let mut count = 0u64;
    let order = {
        let mut cmp = |a: usize, b: usize| {
            count += 1;
            less(&items[a], &items[b])
        };
        merge_insertion((0..items.len()).collect(), &mut cmp)
    };
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    let sorted = order
        .into_iter()
        .map(|i| slots[i].take().expect("each index appears once"))
        .collect();
    (sorted, count)
}

/// Sorts a slice ascending by merge insertion, returning the comparison count.
pub fn fja_sort<T: Ord + Clone>(items: &[T]) -> (Vec<T>, u64) {
    fja_sort_by(items.to_vec(), |a, b| a.cmp(b) == Ordering::Less)
}

/// Jacobsthal-derived batch boundaries 1, 3, 5, 11, 21, 43, ...
fn insertion_batches() -> impl Iterator<Item = usize> {
    let (mut a, mut b) = (1usize, 1usize);
    std::iter::from_fn(move || {
        let next = b + 2 * a;
        a = b;
        b = next;
        Some(b)
    })
}

/// Merge insertion on indices; `less(a, b)` answers whether `a` sorts first.
fn merge_insertion<F>(idx: Vec<usize>, less: &mut F) -> Vec<usize>
where
    F: FnMut(usize, usize) -> bool,
{
    let n = idx.len();
    if n <= 1 {
        return idx;
    }
    let half = n / 2;
    let mut partner = std::collections::HashMap::with_capacity(half);
    let mut winners = Vec::with_capacity(half);
    for pair in idx.chunks_exact(2) {
        let (lo, hi) = if less(pair[0], pair[1]) {
            (pair[0], pair[1])
        } else {
            (pair[1], pair[0])
        };
        partner.insert(hi, lo);
        winners.push(hi);
    }
    let straggler = (n % 2 == 1).then(|| idx[n - 1]);

    let sorted = merge_insertion(winners, less);
    let mut chain = Vec::with_capacity(n);
    chain.push(partner[&sorted[0]]);
    chain.extend_from_slice(&sorted);

    // pending[i] = (element, bound) for b_{i+2}; the straggler has no bound
    let mut pending: Vec<(usize, Option<usize>)> = sorted[1..]
        .iter()
        .map(|&a| (partner[&a], Some(a)))
        .collect();
    if let Some(s) = straggler {
        pending.push((s, None));
    }

    // b_1 is already placed, so pending index i holds b_{i+2}
    let total = pending.len() + 1;
    let mut done = 1;
    for boundary in insertion_batches() {
        let hi = boundary.min(total);
        for b in (done + 1..=hi).rev() {
            let (x, bound) = pending[b - 2];
            let end = match bound {
                Some(a) => chain
                    .iter()
                    .position(|&c| c == a)
                    .expect("partner is in chain"),
                None => chain.len(),
            };
            let (mut lo, mut hi) = (0, end);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if less(x, chain[mid]) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            chain.insert(lo, x);
        }
        done = hi;
        if done >= total {
            break;
        }
    }
    chain
}

/// `T(k)` for `k = 1..=F(n)`: the number of distinct elements compared in
/// the first `k` comparisons of a worst-case merge insertion run.
///
/// The worst case is forced by an adversary that answers each comparison so
/// that the knowledge poset keeps the most linear extensions; when that run
/// finishes early the profile is padded with its final value.
pub fn fja_touch_profile(n: usize) -> Result<Vec<usize>, PosetError> {
    let mut known = Poset::new_antichain(n)?;
    let mut scratch = crate::linext::DownsetTable::new(n);
    let mut touched = 0u16;
    let mut profile = Vec::new();
    let answer = |a: usize, b: usize| -> bool {
        // a < b ?
        if known.is_related(a, b) {
            return true;
        }
        if known.is_related(b, a) {
            return false;
        }
        let pt = crate::linext::count_all_pairs(&known, &mut scratch);
        let a_first = pt.get(a, b) >= pt.get(b, a);
        known = if a_first {
            known.add_unrelated(a, b)
        } else {
            known.add_unrelated(b, a)
        };
        a_first
    };
    let mut answer = answer;
    let mut record = |a: usize, b: usize| {
        touched |= (1 << a) | (1 << b);
        profile.push(touched.count_ones() as usize);
        answer(a, b)
    };
    merge_insertion((0..n).collect(), &mut record);
    let worst = fja_worst_case(n) as usize;
    if let Some(&last) = profile.last() {
        while profile.len() < worst {
            profile.push(last);
        }
    }
    Ok(profile)
}

/// One row of the bounds table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsRow {
    pub n: usize,
    /// `ceil(log2 n!)`
    pub lower_bound: u32,
    /// worst case of merge insertion
    pub merge_insertion: u64,
    pub known_optimum: Option<KnownOptimum>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnownOptimum {
    pub comparisons: u64,
    pub source: &'static str,
}

/// Published exact values of the minimum worst-case comparison count.
pub fn known_optimum(n: usize) -> Option<KnownOptimum> {
    let (comparisons, source) = match n {
        1..=11 => (itlb(n) as u64, "merge insertion meets the lower bound"),
        12..=15 => ((4 * n - 18) as u64, "exhaustive computer search"),
        20 | 21 => (itlb(n) as u64, "merge insertion meets the lower bound"),
        22 => (fja_worst_case(22), "exhaustive computer search"),
        _ => return None,
    };
    Some(KnownOptimum {
        comparisons,
        source,
    })
}

pub fn bounds_row(n: usize) -> BoundsRow {
    BoundsRow {
        n,
        lower_bound: itlb(n),
        merge_insertion: fja_worst_case(n),
        known_optimum: known_optimum(n),
    }
}
