use std::collections::BTreeSet;

use proptest::prelude::*;
use varclust::metrics::{adjusted_rand_index, num_selected, same_partition, vser};

/// ARI from the four pair counts, enumerating every pair.
fn pair_count_ari(a: &[usize], b: &[usize]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let denom: f64 = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if same_partition(a, b) {
        return 100.0;
    }
    if denom == 0.0 {
        return 0.0;
    }
    100.0 * 2.0 * (n00 * n11 - n01 * n10) / denom
}

fn partitions() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2usize..=30).prop_flat_map(|n| (prop::collection::vec(0usize..5, n), prop::collection::vec(0usize..5, n)))
}

fn subset() -> impl Strategy<Value = BTreeSet<usize>> {
    prop::collection::btree_set(0usize..20, 0..20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ari_matches_pair_counting((a, b) in partitions()) {
        let ari = adjusted_rand_index(&a, &b).unwrap();
        let oracle = pair_count_ari(&a, &b);
        prop_assert!((ari - oracle).abs() < 1e-9, "{ari} vs {oracle}");
    }

    #[test]
    fn ari_is_symmetric((a, b) in partitions()) {
        prop_assert_eq!(adjusted_rand_index(&a, &b).unwrap(), adjusted_rand_index(&b, &a).unwrap());
    }

    #[test]
    fn ari_ignores_label_names((a, b) in partitions(), shift in 1usize..50) {
        let renamed: Vec<usize> = a.iter().map(|&l| (4 - l) * 7 + shift).collect();
        prop_assert_eq!(adjusted_rand_index(&a, &b).unwrap(), adjusted_rand_index(&renamed, &b).unwrap());
        prop_assert_eq!(adjusted_rand_index(&a, &renamed).unwrap(), 100.0);
    }

    #[test]
    fn vser_is_a_scaled_metric(x in subset(), y in subset(), z in subset()) {
        let p = 20;
        prop_assert_eq!(vser(&x, &x, p), 0.0);
        prop_assert_eq!(vser(&x, &y, p), vser(&y, &x, p));
        prop_assert!(vser(&x, &z, p) <= vser(&x, &y, p) + vser(&y, &z, p) + 1e-12);
        prop_assert!((0.0..=100.0).contains(&vser(&x, &y, p)));
    }
}

#[test]
fn hand_computed_ari() {
    // contingency [[2,1,0],[0,1,2]]: index 2, row pairs 6, column pairs 3, total 15
    let ari = adjusted_rand_index(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 2, 2]).unwrap();
    let expected = 100.0 * (2.0 - 1.2) / (4.5 - 1.2);
    assert!((ari - expected).abs() < 1e-12);
    assert!(adjusted_rand_index(&[0, 1], &[0]).is_err());
}

#[test]
fn vser_counts_misses_and_false_picks() {
    let sel: BTreeSet<usize> = [0, 1, 7].into();
    let truth: BTreeSet<usize> = (0..5).collect();
    assert_eq!(vser(&sel, &truth, 25), 16.0);
    assert_eq!(num_selected(&sel), 3);
}
