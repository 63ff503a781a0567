//! Oracles shared by the integration suites. Nothing here calls into the
//! library's counting or search code.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use sortbound::Poset;

/// Every permutation of `0..n`, as position vectors: `pos[x]` is the rank of
/// element `x`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            let mut pos = vec![0; n];
            for (rank, &x) in prefix.iter().enumerate() {
                pos[x] = rank;
            }
            out.push(pos);
            return;
        }
        for x in 0..n {
            if !used[x] {
                used[x] = true;
                prefix.push(x);
                go(n, prefix, used, out);
                prefix.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(n, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

type State = Vec<u64>;

/// Exhaustive minimax over comparison trees, states being explicit sets of
/// still-possible permutations. No lower-bound pruning.
pub struct SortOracle {
    n: usize,
    words: usize,
    /// before[j][k]: permutations placing j before k
    before: Vec<Vec<State>>,
    memo: HashMap<State, u32>,
}

impl SortOracle {
    pub fn new(n: usize) -> Self {
        let perms = permutations(n);
        let words = perms.len().div_ceil(64);
        let mut before = vec![vec![vec![0u64; words]; n]; n];
        for (i, pos) in perms.iter().enumerate() {
            for j in 0..n {
                for k in 0..n {
                    if j != k && pos[j] < pos[k] {
                        before[j][k][i / 64] |= 1 << (i % 64);
                    }
                }
            }
        }
        SortOracle {
            n,
            words,
            before,
            memo: HashMap::new(),
        }
    }

    fn all(&self) -> State {
        let count = (1..=self.n).product::<usize>();
        let mut s = vec![0u64; self.words];
        for i in 0..count {
            s[i / 64] |= 1 << (i % 64);
        }
        s
    }

    fn size(s: &State) -> u32 {
        s.iter().map(|w| w.count_ones()).sum()
    }

    fn depth(&mut self, s: State) -> u32 {
        if Self::size(&s) <= 1 {
            return 0;
        }
        if let Some(&d) = self.memo.get(&s) {
            return d;
        }
        let mut best = u32::MAX;
        for j in 0..self.n {
            for k in j + 1..self.n {
                let mask = &self.before[j][k];
                let a: State = s.iter().zip(mask).map(|(x, m)| x & m).collect();
                let b: State = s.iter().zip(mask).map(|(x, m)| x & !m).collect();
                if Self::size(&a) == 0 || Self::size(&b) == 0 {
                    continue;
                }
                let da = self.depth(a);
                if da + 1 >= best {
                    continue;
                }
                let db = self.depth(b);
                best = best.min(1 + da.max(db));
            }
        }
        self.memo.insert(s, best);
        best
    }

    /// Minimum worst-case comparisons to sort `n` elements.
    pub fn min_comparisons(&mut self) -> u32 {
        let all = self.all();
        self.depth(all)
    }

    /// Minimum worst-case comparisons to finish sorting once the relations
    /// of `p` are known.
    pub fn depth_of(&mut self, p: &Poset) -> u32 {
        let perms = permutations(self.n);
        let mut s = vec![0u64; self.words];
        for (i, pos) in perms.iter().enumerate() {
            let fits = (0..self.n)
                .all(|j| (0..self.n).all(|k| j == k || !p.is_related(j, k) || pos[j] < pos[k]));
            if fits {
                s[i / 64] |= 1 << (i % 64);
            }
        }
        self.depth(s)
    }

    /// Whether some tree of depth at most `budget` sorts while having touched
    /// between `lo` and `hi` elements after `step` comparisons.
    pub fn touch_feasible(&self, budget: u32, step: u32, lo: usize, hi: usize) -> bool {
        let mut memo = HashMap::new();
        self.touch_go(self.all(), 0, 0, budget, (step, lo, hi), &mut memo)
    }

    fn touch_go(
        &self,
        s: State,
        touched: u32,
        depth: u32,
        budget: u32,
        bound: (u32, usize, usize),
        memo: &mut HashMap<(State, u32, u32), bool>,
    ) -> bool {
        let (step, lo, hi) = bound;
        let in_band = (lo..=hi).contains(&(touched.count_ones() as usize));
        let done = Self::size(&s) <= 1;
        if (depth == step || (done && depth < step)) && !in_band {
            return false;
        }
        if done {
            return true;
        }
        if depth == budget {
            return false;
        }
        let key = (s.clone(), touched, depth);
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let mut ok = false;
        'pairs: for j in 0..self.n {
            for k in j + 1..self.n {
                let mask = &self.before[j][k];
                let a: State = s.iter().zip(mask).map(|(x, m)| x & m).collect();
                let b: State = s.iter().zip(mask).map(|(x, m)| x & !m).collect();
                if Self::size(&a) == 0 || Self::size(&b) == 0 {
                    continue;
                }
                let t = touched | (1 << j) | (1 << k);
                if self.touch_go(a, t, depth + 1, budget, bound, memo)
                    && self.touch_go(b, t, depth + 1, budget, bound, memo)
                {
                    ok = true;
                    break 'pairs;
                }
            }
        }
        memo.insert(key, ok);
        ok
    }
}

/// A poset reached from the antichain by up to `max_steps` random
/// comparisons, each answered at random.
pub fn random_poset<R: Rng>(rng: &mut R, n: usize, max_steps: usize) -> Poset {
    let mut p = Poset::new_antichain(n).unwrap();
    let steps = rng.gen_range(0..=max_steps);
    for _ in 0..steps {
        let pairs: Vec<_> = p.unrelated_pairs().collect();
        if pairs.is_empty() {
            break;
        }
        let (j, k) = pairs[rng.gen_range(0..pairs.len())];
        p = if rng.gen_bool(0.5) {
            p.add_relation(j, k).unwrap()
        } else {
            p.add_relation(k, j).unwrap()
        };
    }
    p
}

/// Extension count by explicit permutation test, for `n <= 8`.
pub fn brute_extensions(p: &Poset) -> u64 {
    let n = p.len();
    permutations(n)
        .iter()
        .filter(|pos| {
            (0..n).all(|j| (0..n).all(|k| j == k || !p.is_related(j, k) || pos[j] < pos[k]))
        })
        .count() as u64
}

/// Whether `a` and `b` are isomorphic, by trying every bijection.
pub fn brute_isomorphic(a: &Poset, b: &Poset) -> bool {
    let n = a.len();
    if n != b.len() {
        return false;
    }
    permutations(n).iter().any(|map| {
        (0..n).all(|j| (0..n).all(|k| a.is_related(j, k) == b.is_related(map[j], map[k])))
    })
}

/// `t[j][k]`: extensions placing `j` before `k`, by explicit permutation
/// test, for `n <= 8`.
pub fn brute_pair_table(p: &Poset) -> Vec<Vec<u64>> {
    let n = p.len();
    let mut t = vec![vec![0u64; n]; n];
    for pos in permutations(n) {
        let fits = (0..n).all(|j| (0..n).all(|k| j == k || !p.is_related(j, k) || pos[j] < pos[k]));
        if !fits {
            continue;
        }
        for j in 0..n {
            for k in 0..n {
                if pos[j] < pos[k] {
                    t[j][k] += 1;
                }
            }
        }
    }
    t
}
