//! Linear extension counting over the lattice of downsets.
//!
//! Every downset `D` of a poset is a node indexed by its characteristic
//! bitmask. `d(D)` counts the linear extensions of the poset restricted to
//! `D` and satisfies `d(D) = sum d(D \ {x})` over maximal `x` in `D`;
//! `u(D)` counts the extensions of the complement and satisfies
//! `u(D) = sum u(D + x)` over minimal `x` outside `D`. One traversal fills
//! `d` from the full set downward, a second fills `u` from the empty set
//! upward and accumulates `t[j][k]`, the number of extensions placing `u_j`
//! before `u_k`, from the edges labeled `j`.
//!
//! The lattice is never materialized. A [`DownsetTable`] holds one record per
//! bitmask plus a visit stamp, so a table allocated once can be reused for
//! any number of posets without clearing.

use thiserror::Error;

use crate::poset::{bits, Poset, MAX_ELEMENTS};

#[derive(Debug, Clone, Copy, Default)]
struct Record {
    d: u64,
    u: u64,
    visited: u64,
}

/// Reusable scratch space for the downset traversals. One per worker.
pub struct DownsetTable {
    capacity: usize,
    records: Vec<Record>,
    stamp: u64,
    d_stamp: u64,
    u_stamp: u64,
    stack: Vec<(u32, bool)>,
}

impl DownsetTable {
    /// Allocates `2^capacity` records; serves any poset with at most
    /// `capacity` elements.
    pub fn new(capacity: usize) -> Self {
        assert!(
            capacity <= MAX_ELEMENTS,
            "capacity {capacity} above {MAX_ELEMENTS}"
        );
        DownsetTable {
            capacity,
            records: vec![Record::default(); 1 << capacity],
            stamp: 0,
            d_stamp: 0,
            u_stamp: 0,
            stack: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn ensure(&mut self, n: usize) {
        if n > self.capacity {
            *self = DownsetTable::new(n);
        }
    }

    /// `d(D)` from the most recent traversal, if `D` was visited by it.
    pub fn down_count(&self, downset: u32) -> Option<u64> {
        let r = self.records.get(downset as usize)?;
        (self.d_stamp > 0 && r.visited >= self.d_stamp).then_some(r.d)
    }

    /// `u(D)` from the most recent pair computation, if `D` was visited by it.
    pub fn up_count(&self, downset: u32) -> Option<u64> {
        let r = self.records.get(downset as usize)?;
        (self.u_stamp > self.d_stamp && r.visited == self.u_stamp).then_some(r.u)
    }

    /// Fills `d` for every downset reachable from the full set. Returns `d(U)`.
    fn fill_down(&mut self, p: &Poset) -> u64 {
        self.stamp += 1;
        let s = self.stamp;
        self.d_stamp = s;
        let full = p.universe() as u32;
        let up: Vec<u32> = (0..p.len()).map(|x| p.above(x) as u32).collect();

        self.stack.clear();
        self.stack.push((full, false));
        while let Some((set, expanded)) = self.stack.pop() {
            if self.records[set as usize].visited == s {
                continue;
            }
            if set == 0 {
                self.records[0] = Record {
                    d: 1,
                    u: 0,
                    visited: s,
                };
                continue;
            }
            let maximal = bits(set as u16).filter(|&x| up[x] & set == 0);
            if expanded {
                let d = maximal
                    .map(|x| self.records[(set & !(1 << x)) as usize].d)
                    .sum();
                let r = &mut self.records[set as usize];
                r.d = d;
                r.visited = s;
            } else {
                self.stack.push((set, true));
                for x in maximal {
                    let child = set & !(1 << x);
                    if self.records[child as usize].visited != s {
                        self.stack.push((child, false));
                    }
                }
            }
        }
        self.records[full as usize].d
    }

    /// Fills `u` from the empty set upward and accumulates the pair table.
    /// Requires `fill_down` on the same poset immediately before.
    fn fill_up(&mut self, p: &Poset, t: &mut [[u64; MAX_ELEMENTS]; MAX_ELEMENTS]) {
        self.stamp += 1;
        let s = self.stamp;
        self.u_stamp = s;
        let full = p.universe() as u32;
        let below: Vec<u32> = p.below_all()[..p.len()].iter().map(|&m| m as u32).collect();

        self.stack.clear();
        self.stack.push((0, false));
        while let Some((set, expanded)) = self.stack.pop() {
            if self.records[set as usize].visited == s {
                continue;
            }
            if set == full {
                let r = &mut self.records[set as usize];
                r.u = 1;
                r.visited = s;
                continue;
            }
            let free = full & !set;
            let addable = bits(free as u16).filter(|&x| below[x] & !set == 0);
            if expanded {
                let d = self.records[set as usize].d;
                let mut u = 0;
                for x in addable {
                    let head = set | (1 << x);
                    let uw = self.records[head as usize].u;
                    u += uw;
                    let flow = d * uw;
                    let row = &mut t[x];
                    for k in bits((full & !head) as u16) {
                        row[k] += flow;
                    }
                }
                let r = &mut self.records[set as usize];
                r.u = u;
                r.visited = s;
            } else {
                self.stack.push((set, true));
                for x in addable {
                    let head = set | (1 << x);
                    if self.records[head as usize].visited != s {
                        self.stack.push((head, false));
                    }
                }
            }
        }
    }
}

/// `t[j][k]` = number of linear extensions with `u_j` before `u_k`, which
/// equals `e(P + u_j u_k)`.
#[derive(Clone, PartialEq, Eq)]
pub struct PairTable {
    n: usize,
    e: u64,
    t: [[u64; MAX_ELEMENTS]; MAX_ELEMENTS],
}

impl PairTable {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `e(P)`.
    pub fn total(&self) -> u64 {
        self.e
    }

    /// `e(P + u_j u_k)`. Meaningless on the diagonal.
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> u64 {
        self.t[j][k]
    }

    /// Row `j` restricted to the first `n` columns.
    pub fn row(&self, j: usize) -> &[u64] {
        &self.t[j][..self.n]
    }
}

impl std::fmt::Debug for PairTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PairTable")
            .field("e", &self.e)
            .field("t", &(0..self.n).map(|j| self.row(j)).collect::<Vec<_>>())
            .finish()
    }
}

/// `e(P)`, the number of linear extensions.
pub fn count_linext(p: &Poset, scratch: &mut DownsetTable) -> u64 {
    scratch.ensure(p.len());
    scratch.fill_down(p)
}

/// `e(P)` together with `e(P + u_j u_k)` for every ordered pair.
pub fn count_all_pairs(p: &Poset, scratch: &mut DownsetTable) -> PairTable {
    scratch.ensure(p.len());
    let e = scratch.fill_down(p);
    let mut t = [[0u64; MAX_ELEMENTS]; MAX_ELEMENTS];
    scratch.fill_up(p, &mut t);
    PairTable { n: p.len(), e, t }
}

/// Elements `x` outside the downset `D` whose predecessors all lie in `D`,
/// that is, the labels of the edges leaving `D`.
pub fn downset_neighbors(p: &Poset, downset: u32) -> Vec<usize> {
    let below = p.below_all();
    let free = p.universe() as u32 & !downset;
    bits(free as u16)
        .filter(|&x| below[x] as u32 & !downset == 0)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("brute-force enumeration refused for {0} elements (limit {BRUTE_FORCE_LIMIT})")]
    TooLarge(usize),
}

pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Counts linear extensions by testing every permutation of the elements.
/// Test oracle only; refuses more than [`BRUTE_FORCE_LIMIT`] elements.
pub fn count_linext_bruteforce(p: &Poset) -> Result<u64, OracleError> {
    let n = p.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(OracleError::TooLarge(n));
    }
    let respects =
        |perm: &[usize]| (0..n).all(|a| (a + 1..n).all(|b| !p.is_related(perm[b], perm[a])));
    // Heap's algorithm, iterative form.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut count = respects(&perm) as u64;
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            count += respects(&perm) as u64;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// u0 < u2, u1 < u2, u1 < u3
    fn four() -> Poset {
        Poset::from_relations(4, [(0, 2), (1, 2), (1, 3)]).unwrap()
    }

    fn mask(xs: &[usize]) -> u32 {
        xs.iter().fold(0, |m, &x| m | (1 << x))
    }

    #[test]
    fn worked_example_counts() {
        let mut table = DownsetTable::new(4);
        let pt = count_all_pairs(&four(), &mut table);
        assert_eq!(pt.total(), 5);
        assert_eq!(table.down_count(mask(&[0, 1, 2, 3])), Some(5));
        assert_eq!(table.down_count(mask(&[0, 1])), Some(2));
        assert_eq!(table.down_count(mask(&[0, 1, 3])), Some(3));
        assert_eq!(table.down_count(mask(&[0, 1, 2])), Some(2));
        assert_eq!(table.down_count(0), Some(1));
        assert_eq!(table.up_count(mask(&[0, 1])), Some(2));
        assert_eq!(table.up_count(mask(&[1])), Some(3));
        assert_eq!(table.up_count(mask(&[0])), Some(2));
        assert_eq!(table.up_count(0), Some(5));
        assert_eq!(table.up_count(mask(&[0, 1, 2, 3])), Some(1));
        // {u2} alone is not a downset
        assert_eq!(table.down_count(mask(&[2])), None);
    }

    #[test]
    fn worked_example_pair_table() {
        let mut table = DownsetTable::new(4);
        let pt = count_all_pairs(&four(), &mut table);
        let expected = [[0, 2, 5, 4], [3, 0, 5, 5], [0, 0, 0, 2], [1, 0, 3, 0]];
        for (j, row) in expected.iter().enumerate() {
            for (k, &want) in row.iter().enumerate() {
                if j != k {
                    assert_eq!(pt.get(j, k), want, "t[{j}][{k}]");
                }
            }
        }
    }

    #[test]
    fn small_pair_tables() {
        let mut table = DownsetTable::new(3);
        let chain = Poset::from_relations(2, [(0, 1)]).unwrap();
        let pt = count_all_pairs(&chain, &mut table);
        assert_eq!((pt.total(), pt.get(0, 1), pt.get(1, 0)), (1, 1, 0));
        let pt = count_all_pairs(&Poset::new_antichain(3).unwrap(), &mut table);
        assert_eq!(pt.total(), 6);
        for j in 0..3 {
            for k in 0..3 {
                if j != k {
                    assert_eq!(pt.get(j, k), 3);
                }
            }
        }
    }

    #[test]
    fn neighbors_of_downsets() {
        let p = four();
        assert_eq!(downset_neighbors(&p, 0), vec![0, 1]);
        assert_eq!(downset_neighbors(&p, mask(&[1])), vec![0, 3]);
        let chain = Poset::from_relations(4, [(2, 0), (0, 3), (3, 1)]).unwrap();
        assert_eq!(downset_neighbors(&chain, 0), vec![2]);
    }

    #[test]
    fn antichain_counts_are_factorials() {
        let mut table = DownsetTable::new(16);
        assert_eq!(
            count_linext(&Poset::new_antichain(1).unwrap(), &mut table),
            1
        );
        assert_eq!(
            count_linext(&Poset::new_antichain(3).unwrap(), &mut table),
            6
        );
        assert_eq!(
            count_linext(&Poset::new_antichain(16).unwrap(), &mut table),
            20_922_789_888_000
        );
    }

    #[test]
    fn table_grows_on_demand() {
        let mut table = DownsetTable::new(2);
        assert_eq!(
            count_linext(&Poset::new_antichain(5).unwrap(), &mut table),
            120
        );
        assert_eq!(table.capacity(), 5);
    }

    #[test]
    fn stale_records_are_not_reused() {
        let mut shared = DownsetTable::new(5);
        let a = Poset::from_relations(5, [(0, 1), (2, 3)]).unwrap();
        let b = Poset::from_relations(5, [(4, 0), (1, 3)]).unwrap();
        let first = count_all_pairs(&a, &mut shared);
        let second = count_all_pairs(&b, &mut shared);
        assert_eq!(first, count_all_pairs(&a, &mut DownsetTable::new(5)));
        assert_eq!(second, count_all_pairs(&b, &mut DownsetTable::new(5)));
        // a d-only pass invalidates the u values of the previous poset
        count_linext(&a, &mut shared);
        assert_eq!(shared.up_count(0), None);
    }

    #[test]
    fn brute_force_oracle() {
        assert_eq!(
            count_linext_bruteforce(&Poset::new_antichain(4).unwrap()),
            Ok(24)
        );
        assert_eq!(count_linext_bruteforce(&four()), Ok(5));
        let chain = Poset::from_relations(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(count_linext_bruteforce(&chain), Ok(1));
        assert_eq!(
            count_linext_bruteforce(&Poset::new_antichain(11).unwrap()),
            Err(OracleError::TooLarge(11))
        );
    }
}
