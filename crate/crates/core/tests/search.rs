mod common;

use std::collections::HashMap;

use common::{permutations, random_poset, SortOracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sortbound::fja::itlb;
use sortbound::search::{
    decide, decide_touch_bounded, is_sortable, CandidateSet, DecisionTree, Outcome, Search,
    SearchOptions, SortabilityCache, Sorter, TouchBound,
};
use sortbound::Poset;

fn opts() -> SearchOptions {
    SearchOptions {
        workers: Some(2),
        ..SearchOptions::default()
    }
}

fn optimum(n: usize) -> u32 {
    SortOracle::new(n).min_comparisons()
}

#[test]
fn threshold_matches_the_exhaustive_oracle() {
    for n in 1..=6 {
        let best = optimum(n);
        assert_eq!(best, itlb(n), "n={n}");
        let first = (0..=12)
            .find(|&c| decide(n, c, &opts()).unwrap().outcome == Outcome::Sortable)
            .unwrap();
        assert_eq!(first as u32, best, "n={n}");
    }
}

#[test]
fn grid_agrees_with_the_oracle_and_is_monotone() {
    for n in 1..=6 {
        let best = optimum(n) as usize;
        let mut previous = Outcome::NotSortable;
        for c in 0..=12 {
            let v = decide(n, c, &opts()).unwrap();
            let expected = if c >= best {
                Outcome::Sortable
            } else {
                Outcome::NotSortable
            };
            assert_eq!(v.outcome, expected, "n={n} C={c}");
            if previous == Outcome::Sortable {
                assert_eq!(v.outcome, Outcome::Sortable);
            }
            previous = v.outcome;
            match v.outcome {
                Outcome::Sortable => assert_eq!(v.first_empty, None),
                Outcome::NotSortable => assert!(v.first_empty.is_some()),
            }
        }
    }
}

/// Runs both phases by hand, returning `S_0..=S_C` and `S*_C, ..., S*_0`
/// (the latter possibly ending early at an empty set).
fn phases(s: &Search, budget: usize) -> (Vec<CandidateSet>, Vec<CandidateSet>) {
    let mut forward = vec![s.initial()];
    while forward.len() <= budget && !forward.last().unwrap().is_empty() {
        let next = s.forward_step(forward.last().unwrap()).unwrap();
        forward.push(next);
    }
    if forward.last().unwrap().is_empty() {
        return (forward, Vec::new());
    }
    let mut stars = vec![s.final_star(forward.last().unwrap())];
    while stars.last().unwrap().step > 0 && !stars.last().unwrap().is_empty() {
        let next = s.backward_step(&forward, &stars);
        stars.push(next);
    }
    (forward, stars)
}

#[test]
fn backward_sets_are_exactly_the_sortable_posets() {
    for (n, budget) in [(3, 3), (4, 5), (4, 6), (5, 7), (5, 8), (6, 10)] {
        let mut oracle = SortOracle::new(n);
        let s = Search::new(n, budget, None, opts()).unwrap();
        let (forward, stars) = phases(&s, budget);
        for star in &stars {
            let current = &forward[star.step];
            for p in current.posets() {
                let key = p.dedup_key();
                let sortable = oracle.depth_of(&p) as usize <= budget - star.step;
                assert_eq!(
                    star.contains(&key),
                    sortable,
                    "n={n} C={budget} step {}",
                    star.step
                );
            }
        }
    }
}

#[test]
fn forward_sets_respect_the_extension_bound() {
    let s = Search::new(6, 10, None, opts()).unwrap();
    let (forward, _) = phases(&s, 10);
    for set in &forward {
        let stats = set.stats();
        assert_eq!(stats.count, set.len());
        assert!(stats.max_e.unwrap() <= 1 << (10 - set.step));
        assert!(set.codes().windows(2).all(|w| w[0] < w[1]));
        for p in set.posets() {
            assert_eq!(p.dedup_key().to_poset().dedup_key(), p.dedup_key());
        }
    }
}

#[test]
fn is_sortable_matches_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=6 {
        let mut oracle = SortOracle::new(n);
        let cache = SortabilityCache::new();
        for _ in 0..40 {
            let p = random_poset(&mut rng, n, n + 3);
            let depth = oracle.depth_of(&p) as usize;
            for r in depth.saturating_sub(2)..=depth + 1 {
                let expected = r >= depth;
                assert_eq!(is_sortable(&p, r, None), expected, "{p:?} r={r}");
                assert_eq!(is_sortable(&p, r, Some(&cache)), expected, "{p:?} r={r}");
            }
        }
    }
}

#[test]
fn cache_does_not_change_verdicts() {
    for (n, c) in [(4, 4), (4, 5), (5, 6), (5, 7), (6, 9), (6, 10), (7, 13)] {
        let with = decide(n, c, &opts()).unwrap();
        let without = decide(
            n,
            c,
            &SearchOptions {
                use_cache: false,
                ..opts()
            },
        )
        .unwrap();
        assert_eq!(with, without, "n={n} C={c}");
    }
}

#[test]
fn worker_count_does_not_change_results() {
    for (n, c) in [(6, 10), (7, 13), (8, 16)] {
        let runs: Vec<_> = [1, 2, 4]
            .into_iter()
            .map(|w| {
                decide(
                    n,
                    c,
                    &SearchOptions {
                        workers: Some(w),
                        ..SearchOptions::default()
                    },
                )
                .unwrap()
            })
            .collect();
        assert!(runs.windows(2).all(|w| w[0] == w[1]), "n={n} C={c}");
    }
}

#[test]
fn known_small_verdicts() {
    let cases = [
        (3, 2, Outcome::NotSortable),
        (4, 4, Outcome::NotSortable),
        (4, 5, Outcome::Sortable),
        (5, 6, Outcome::NotSortable),
        (5, 7, Outcome::Sortable),
        (6, 10, Outcome::Sortable),
        (7, 13, Outcome::Sortable),
        (8, 16, Outcome::Sortable),
        (9, 19, Outcome::Sortable),
        (10, 22, Outcome::Sortable),
    ];
    for (n, c, outcome) in cases {
        assert_eq!(
            decide(n, c, &opts()).unwrap().outcome,
            outcome,
            "n={n} C={c}"
        );
    }
    let v = decide(3, 2, &opts()).unwrap();
    assert_eq!(v.first_empty, Some(1));
}

#[test]
fn vacuous_touch_bound_changes_nothing() {
    for n in 1..=6 {
        for c in 0..=12 {
            let plain = decide(n, c, &opts()).unwrap();
            for k in [0, 1, c / 2, c] {
                let bounded = decide_touch_bounded(n, c, k, 0, n, &opts()).unwrap();
                assert_eq!(bounded.outcome, plain.outcome, "n={n} C={c} k={k}");
                assert_eq!(bounded.per_level, plain.per_level, "n={n} C={c} k={k}");
            }
        }
    }
}

#[test]
fn touch_bounds_agree_with_the_oracle() {
    for n in 3..=5 {
        let oracle = SortOracle::new(n);
        let best = itlb(n) as usize;
        for c in [best, best + 1] {
            for step in 0..=c {
                for lo in 0..=n {
                    for hi in lo..=n {
                        let v = decide_touch_bounded(n, c, step, lo, hi, &opts()).unwrap();
                        let expected = oracle.touch_feasible(c as u32, step as u32, lo, hi);
                        assert_eq!(
                            v.outcome == Outcome::Sortable,
                            expected,
                            "n={n} C={c} touch {step} {lo}..={hi}"
                        );
                    }
                }
            }
        }
    }
    let v = decide_touch_bounded(4, 5, 2, 4, 4, &opts()).unwrap();
    assert_eq!(v.outcome, Outcome::Sortable);
    assert!(SortOracle::new(4).touch_feasible(5, 2, 4, 4));
}

#[test]
fn invalid_arguments_are_rejected() {
    assert!(decide(0, 3, &opts()).is_err());
    assert!(decide(17, 3, &opts()).is_err());
    assert!(decide(4, 1000, &opts()).is_err());
    assert!(decide_touch_bounded(4, 5, 2, 3, 2, &opts()).is_err());
    assert!(decide_touch_bounded(4, 5, 2, 0, 5, &opts()).is_err());
}

/// Follows `tree` for the order given by `pos`, returning the comparisons
/// made and the poset known at the leaf.
fn walk(tree: &DecisionTree, start: &Poset, pos: &[usize]) -> (usize, Poset) {
    let mut node = tree;
    let mut p = *start;
    let mut depth = 0;
    while let DecisionTree::Compare {
        j,
        k,
        less,
        greater,
    } = node
    {
        assert!(!p.comparable(*j, *k), "tree asks a known comparison");
        depth += 1;
        if pos[*j] < pos[*k] {
            p = p.add_relation(*j, *k).unwrap();
            node = less;
        } else {
            p = p.add_relation(*k, *j).unwrap();
            node = greater;
        }
    }
    (depth, p)
}

#[test]
fn decision_trees_sort_every_permutation() {
    for n in 1..=7 {
        let budget = itlb(n) as usize;
        let start = Poset::new_antichain(n).unwrap();
        let cache = SortabilityCache::new();
        let tree = Sorter::new(budget, None, Some(&cache))
            .decision_tree(&start, budget)
            .unwrap();
        assert!(tree.depth() <= budget);
        for pos in permutations(n) {
            let (depth, leaf) = walk(&tree, &start, &pos);
            assert!(depth <= budget);
            assert!(leaf.is_linear());
            for j in 0..n {
                for k in 0..n {
                    assert_eq!(leaf.is_related(j, k), pos[j] <= pos[k]);
                }
            }
        }
        if budget > 0 {
            assert!(Sorter::new(budget - 1, None, None)
                .decision_tree(&start, budget - 1)
                .is_none());
        }
    }
}

#[test]
fn touch_bounded_trees_respect_the_band() {
    let touch = TouchBound {
        step: 2,
        lo: 4,
        hi: 4,
    };
    let start = Poset::new_antichain(4).unwrap();
    let tree = Sorter::new(5, Some(touch), None)
        .decision_tree(&start, 5)
        .unwrap();
    let mut touched_at_two = HashMap::new();
    for pos in permutations(4) {
        let mut node = &tree;
        let mut p = start;
        for _ in 0..2 {
            if let DecisionTree::Compare {
                j,
                k,
                less,
                greater,
            } = node
            {
                let (a, b, next) = if pos[*j] < pos[*k] {
                    (*j, *k, less)
                } else {
                    (*k, *j, greater)
                };
                p = p.add_relation(a, b).unwrap();
                node = next;
            }
        }
        touched_at_two.insert(p.dedup_key(), p.touched_count());
        assert!(walk(&tree, &start, &pos).1.is_linear());
    }
    assert!(touched_at_two.values().all(|&t| t == 4));
}
