mod common;

use common::{brute_isomorphic, random_poset};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sortbound::store::{parse_poset, render_poset};
use sortbound::{count_linext, DownsetTable, Poset};

fn poset_strategy(max_n: usize) -> impl Strategy<Value = Poset> {
    (1..=max_n, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_poset(&mut rng, n, 3 * n)
    })
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn relation_is_a_partial_order(p in poset_strategy(16)) {
        let n = p.len();
        for a in 0..n {
            prop_assert!(p.is_related(a, a));
            for b in 0..n {
                if a != b && p.is_related(a, b) {
                    prop_assert!(!p.is_related(b, a));
                }
                for c in 0..n {
                    if p.is_related(a, b) && p.is_related(b, c) {
                        prop_assert!(p.is_related(a, c));
                    }
                }
            }
        }
        prop_assert!(p.validate().is_ok());
    }

    #[test]
    fn codes_ignore_labels(p in poset_strategy(16), seed in any::<u64>()) {
        let q = p.relabel(&shuffled(p.len(), seed));
        prop_assert_eq!(p.canonical_code(), q.canonical_code());
        prop_assert_eq!(p.dedup_key(), q.dedup_key());
        prop_assert_eq!(p.canonical_code().to_poset().canonical_code(), p.canonical_code());
    }

    #[test]
    fn dedup_key_identifies_duals(p in poset_strategy(16)) {
        prop_assert_eq!(p.dedup_key(), p.dual().dedup_key());
        prop_assert!(p.dedup_key() <= p.canonical_code());
        prop_assert_eq!(p.dual().dual(), p);
    }

    #[test]
    fn isolated_elements_scale_the_count(p in poset_strategy(10), m in 0usize..=4) {
        let mut table = DownsetTable::new(16);
        let n = p.len() as u64;
        let base = count_linext(&p, &mut table);
        let grown = count_linext(&p.add_isolated(m).unwrap(), &mut table);
        let factor: u64 = (n + 1..=n + m as u64).product();
        prop_assert_eq!(grown, base * factor);
    }

    #[test]
    fn text_round_trips(p in poset_strategy(16)) {
        let text = render_poset(&p);
        prop_assert_eq!(parse_poset(&text).unwrap(), p);
    }

    #[test]
    fn adding_a_relation_keeps_the_closure(p in poset_strategy(12), j in 0usize..12, k in 0usize..12) {
        let n = p.len();
        let (j, k) = (j % n, k % n);
        match p.add_relation(j, k) {
            Ok(q) => {
                prop_assert!(q.is_related(j, k));
                for a in 0..n {
                    for b in 0..n {
                        let via = p.is_related(a, j) && p.is_related(k, b);
                        prop_assert_eq!(q.is_related(a, b), p.is_related(a, b) || via);
                    }
                }
            }
            Err(_) => prop_assert!(j == k || p.is_related(k, j)),
        }
    }
}

#[test]
fn codes_match_brute_force_isomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=6 {
        let posets: Vec<Poset> = (0..60).map(|_| random_poset(&mut rng, n, n + 2)).collect();
        for a in &posets {
            for b in &posets {
                let same = a.canonical_code() == b.canonical_code();
                assert_eq!(same, brute_isomorphic(a, b), "{a:?} {b:?}");
                let twin = a.dedup_key() == b.dedup_key();
                assert_eq!(twin, same || brute_isomorphic(a, &b.dual()));
            }
        }
    }
}

#[test]
fn touched_and_linear() {
    let p = Poset::from_relations(5, [(0, 1), (1, 2)]).unwrap();
    assert_eq!(p.touched_count(), 3);
    assert!(!p.is_linear());
    let chain = Poset::from_relations(3, [(2, 0), (0, 1)]).unwrap();
    assert!(chain.is_linear());
    assert_eq!(Poset::new_antichain(1).unwrap().touched_count(), 0);
    assert!(Poset::new_antichain(1).unwrap().is_linear());
}

#[test]
fn rejects_bad_input() {
    assert!(Poset::new_antichain(0).is_err());
    assert!(Poset::new_antichain(17).is_err());
    assert!(Poset::from_relations(3, [(0, 3)]).is_err());
    assert!(Poset::from_relations(3, [(1, 1)]).is_err());
    assert!(Poset::from_relations(3, [(0, 1), (1, 2), (2, 0)]).is_err());
}
