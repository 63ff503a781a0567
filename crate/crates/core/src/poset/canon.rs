//! Exact canonical labeling of posets.
//!
//! Posets are split into connected components of the comparability graph.
//! Each component is labeled by individualization-refinement: an ordered
//! partition of the elements is refined until every element in a cell has
//! the same count of predecessors, successors, lower covers and upper covers
//! in every other cell; ties are broken by trying each element of the first
//! non-singleton cell, and the smallest relation matrix over all leaves wins.
//! Twins (elements with identical strict up- and down-sets) are swapped by
//! an automorphism, so only one twin per cell is ever tried. Components are
//! then laid out block-diagonally in sorted order.

use std::cmp::Ordering;
use std::fmt;

use super::{bits, Poset, MAX_ELEMENTS};

/// Labeling-independent encoding of a poset: the canonically relabeled
/// relation rows, big-endian, two bytes per element.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode {
    n: u8,
    bytes: [u8; 2 * MAX_ELEMENTS],
}

impl CanonicalCode {
    pub(crate) fn from_rows(rows: &[u16]) -> Self {
        let mut bytes = [0u8; 2 * MAX_ELEMENTS];
        for (i, r) in rows.iter().enumerate() {
            bytes[2 * i..2 * i + 2].copy_from_slice(&r.to_be_bytes());
        }
        CanonicalCode {
            n: rows.len() as u8,
            bytes,
        }
    }

    /// Decodes a code read back from storage. Returns `None` unless the
    /// bytes describe a valid poset on `n` elements.
    pub fn from_bytes(n: usize, bytes: &[u8]) -> Option<Self> {
        if !(1..=MAX_ELEMENTS).contains(&n) || bytes.len() != 2 * n {
            return None;
        }
        let rows: Vec<u16> = bytes
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        Poset::from_rows(n, &rows).ok()?;
        Some(Self::from_rows(&rows))
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Width of the encoding: two bytes per element.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..2 * self.len()]
    }

    /// The canonical representative itself.
    pub fn to_poset(&self) -> Poset {
        let mut rel = [0u16; MAX_ELEMENTS];
        for (i, r) in rel.iter_mut().enumerate().take(self.len()) {
            *r = u16::from_be_bytes([self.bytes[2 * i], self.bytes[2 * i + 1]]);
        }
        Poset { n: self.n, rel }
    }
}

impl fmt::Debug for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalCode({}:", self.n)?;
        for b in self.as_bytes() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

pub(super) fn canonical_code(p: &Poset) -> CanonicalCode {
    let n = p.len();
    let comps = components(p);
    if comps.len() == 1 {
        let rows = Canonizer::new(p.rows()).run();
        return CanonicalCode::from_rows(&rows[..n]);
    }

    let mut parts: Vec<Vec<u16>> = comps
        .iter()
        .map(|&mask| {
            let sub = restrict(p, mask);
            if sub.len() == 1 {
                sub
            } else {
                Canonizer::new(&sub).run()[..sub.len()].to_vec()
            }
        })
        .collect();
    parts.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let mut rows = [0u16; MAX_ELEMENTS];
    let mut offset = 0;
    for part in &parts {
        for (i, &r) in part.iter().enumerate() {
            rows[offset + i] = r << offset;
        }
        offset += part.len();
    }
    CanonicalCode::from_rows(&rows[..n])
}

/// Connected components of the comparability graph, as masks.
fn components(p: &Poset) -> Vec<u16> {
    let below = p.below_all();
    let mut seen = 0u16;
    let mut out = Vec::new();
    for start in 0..p.len() {
        if seen & (1 << start) != 0 {
            continue;
        }
        let mut comp = 1u16 << start;
        let mut frontier = comp;
        while frontier != 0 {
            let mut next = 0u16;
            for x in bits(frontier) {
                next |= p.rows()[x] | below[x];
            }
            frontier = next & !comp;
            comp |= next;
        }
        seen |= comp;
        out.push(comp);
    }
    out
}

/// The sub-poset on `mask`, relabeled to `0..popcount(mask)` in index order.
fn restrict(p: &Poset, mask: u16) -> Vec<u16> {
    let mut index = [0usize; MAX_ELEMENTS];
    let members: Vec<usize> = bits(mask).collect();
    for (i, &x) in members.iter().enumerate() {
        index[x] = i;
    }
    members
        .iter()
        .map(|&x| bits(p.rows()[x] & mask).fold(0u16, |acc, b| acc | (1 << index[b])))
        .collect()
}

/// Ordered partition of the elements into cells.
#[derive(Clone, Copy)]
struct Partition {
    cells: [u16; MAX_ELEMENTS],
    len: usize,
}

impl Partition {
    fn cells(&self) -> &[u16] {
        &self.cells[..self.len]
    }
}

struct Canonizer {
    n: usize,
    rel: [u16; MAX_ELEMENTS],
    up: [u16; MAX_ELEMENTS],
    down: [u16; MAX_ELEMENTS],
    up_cover: [u16; MAX_ELEMENTS],
    down_cover: [u16; MAX_ELEMENTS],
    best: Option<[u16; MAX_ELEMENTS]>,
}

impl Canonizer {
    fn new(rows: &[u16]) -> Self {
        let n = rows.len();
        let mut rel = [0u16; MAX_ELEMENTS];
        let mut up = [0u16; MAX_ELEMENTS];
        let mut down = [0u16; MAX_ELEMENTS];
        for (x, &row) in rows.iter().enumerate() {
            rel[x] = row;
            up[x] = row & !(1 << x);
            for y in bits(up[x]) {
                down[y] |= 1 << x;
            }
        }
        let mut up_cover = [0u16; MAX_ELEMENTS];
        let mut down_cover = [0u16; MAX_ELEMENTS];
        for x in 0..n {
            let implied = bits(up[x]).fold(0u16, |acc, y| acc | up[y]);
            up_cover[x] = up[x] & !implied;
            for y in bits(up_cover[x]) {
                down_cover[y] |= 1 << x;
            }
        }
        Canonizer {
            n,
            rel,
            up,
            down,
            up_cover,
            down_cover,
            best: None,
        }
    }

    fn run(mut self) -> [u16; MAX_ELEMENTS] {
        let full = if self.n >= 16 {
            u16::MAX
        } else {
            (1u16 << self.n) - 1
        };
        let mut part = Partition {
            cells: [0; MAX_ELEMENTS],
            len: 1,
        };
        part.cells[0] = full;
        self.refine(&mut part);
        self.search(&part);
        self.best.expect("search reaches at least one leaf")
    }

    /// Hash of the element's adjacency counts into every cell. Equal
    /// counts give equal hashes; a collision only leaves a cell coarser.
    #[inline]
    fn signature(&self, x: usize, cells: &[u16]) -> u64 {
        let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
        for &cell in cells {
            let v = (self.down[x] & cell).count_ones()
                | (self.up[x] & cell).count_ones() << 5
                | (self.down_cover[x] & cell).count_ones() << 10
                | (self.up_cover[x] & cell).count_ones() << 15;
            h = (h.rotate_left(23) ^ v as u64).wrapping_mul(0x2545_f491_4f6c_dd1d);
        }
        h
    }

    /// Splits cells until no cell splits further. Sub-cells keep the
    /// position of their parent and are ordered by signature.
    fn refine(&self, part: &mut Partition) {
        loop {
            let before = part.len;
            let mut next = Partition {
                cells: [0; MAX_ELEMENTS],
                len: 0,
            };
            for &cell in part.cells() {
                if cell & (cell - 1) == 0 {
                    next.cells[next.len] = cell;
                    next.len += 1;
                    continue;
                }
                let mut members = [(0u64, 0u8); MAX_ELEMENTS];
                let mut m = 0;
                for x in bits(cell) {
                    members[m] = (self.signature(x, part.cells()), x as u8);
                    m += 1;
                }
                let members = &mut members[..m];
                members.sort_unstable();
                let mut group = 1u16 << members[0].1;
                for i in 1..m {
                    if members[i].0 != members[i - 1].0 {
                        next.cells[next.len] = group;
                        next.len += 1;
                        group = 0;
                    }
                    group |= 1 << members[i].1;
                }
                next.cells[next.len] = group;
                next.len += 1;
            }
            *part = next;
            if part.len == before {
                return;
            }
        }
    }

    #[inline]
    fn twins(&self, x: usize, y: usize) -> bool {
        self.up[x] == self.up[y] && self.down[x] == self.down[y]
    }

    fn search(&mut self, part: &Partition) {
        let Some(target) = part.cells().iter().position(|c| c & (c - 1) != 0) else {
            self.leaf(part.cells());
            return;
        };
        let cell = part.cells[target];
        let mut tried = 0u16;
        for x in bits(cell) {
            if bits(tried).any(|y| self.twins(x, y)) {
                continue;
            }
            tried |= 1 << x;
            let mut next = Partition {
                cells: [0; MAX_ELEMENTS],
                len: part.len + 1,
            };
            next.cells[..target].copy_from_slice(&part.cells[..target]);
            next.cells[target] = 1 << x;
            next.cells[target + 1] = cell & !(1 << x);
            next.cells[target + 2..part.len + 1].copy_from_slice(&part.cells[target + 1..part.len]);
            self.refine(&mut next);
            self.search(&next);
        }
    }

    fn leaf(&mut self, cells: &[u16]) {
        let mut position = [0usize; MAX_ELEMENTS];
        for (i, &cell) in cells.iter().enumerate() {
            position[cell.trailing_zeros() as usize] = i;
        }
        let mut rows = [0u16; MAX_ELEMENTS];
        let mut decided = self.best.is_none();
        for (i, &cell) in cells.iter().enumerate() {
            let x = cell.trailing_zeros() as usize;
            rows[i] = bits(self.rel[x]).fold(0u16, |acc, b| acc | (1 << position[b]));
            if !decided {
                match rows[i].cmp(&self.best.as_ref().unwrap()[i]) {
                    Ordering::Less => decided = true,
                    Ordering::Greater => return,
                    Ordering::Equal => {}
                }
            }
        }
        if decided {
            self.best = Some(rows);
        }
    }
}
