mod oracle;

use datatailor::clustering::{cut_dendrogram, pairwise_distances, ward_dendrogram, Points, WardVariant};
use oracle::{direct_distances, labels_after, naive_ward, random_points, sse};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn points(rows: &[Vec<f64>]) -> Points {
    Points::from_rows(rows).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// NN-chain output must equal the greedy oracle merge for merge, and merge
/// heights must equal the brute-force SSE increase.
fn check_ward(rows: &[Vec<f64>]) {
    let d = ward_dendrogram(&points(rows), WardVariant::Classical).unwrap();
    let o = naive_ward(rows);
    assert_eq!(d.merges.len(), o.len());
    for (m, w) in d.merges.iter().zip(&o) {
        assert_eq!((m.left, m.right, m.size), (w.left, w.right, w.size));
        assert!(rel_close(m.height, w.height, 1e-9), "{} vs {}", m.height, w.height);
    }
    for pair in o.windows(2) {
        assert!(pair[1].height >= pair[0].height * (1.0 - 1e-12));
    }

    // brute-force SSE: each merge raises total SSE by exactly its height
    let n = rows.len();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for m in &d.merges {
        let mut joined = members[m.left].clone();
        joined.extend_from_slice(&members[m.right]);
        let delta = sse(rows, &joined) - sse(rows, &members[m.left]) - sse(rows, &members[m.right]);
        assert!((delta - m.height).abs() <= 1e-9 * (1.0 + m.height));
        members.push(joined);
    }
}

#[test]
fn nn_chain_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let n = rng.random_range(2..=60);
        let d = rng.random_range(1..=16);
        check_ward(&random_points(&mut rng, n, d));
    }
}

#[test]
fn gram_distances_match_direct_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let rows = random_points(&mut rng, 200, 32);
        let fast = pairwise_distances(&points(&rows)).unwrap();
        let slow = direct_distances(&rows);
        for (i, row) in slow.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert!((fast.get(i, j) - want).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn cut_labels_match_oracle_prefix() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let n = rng.random_range(2..=50);
        let rows = random_points(&mut rng, n, 4);
        let p = points(&rows);
        let d = ward_dendrogram(&p, WardVariant::Classical).unwrap();
        let lambda = rng.random_range(0.01..=1.0);
        let cut = cut_dendrogram(&d, &p, lambda).unwrap();
        let threshold = lambda * d.max_height();
        let applied = d.merges.iter().take_while(|m| m.height <= threshold).count();
        let pairs: Vec<(usize, usize)> = d.merges.iter().map(|m| (m.left, m.right)).collect();
        let labels = labels_after(rows.len(), &pairs, applied);
        assert_eq!(cut.k(), rows.len() - applied);
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                assert_eq!(labels[i] == labels[j], cut.assignment[i] == cut.assignment[j]);
            }
        }
    }
}

#[test]
fn literal_variant_heights_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = rng.random_range(2..=40);
        let rows = random_points(&mut rng, n, 3);
        let d = ward_dendrogram(&points(&rows), WardVariant::PaperLiteral).unwrap();
        assert_eq!(d.merges.len(), rows.len() - 1);
        for w in d.merges.windows(2) {
            assert!(w[1].height >= w[0].height);
        }
    }
}

fn point_set() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (any::<u64>(), 2usize..40, 1usize..6)
        .prop_map(|(seed, n, d)| random_points(&mut ChaCha8Rng::seed_from_u64(seed), n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ward_equals_oracle(rows in point_set()) {
        check_ward(&rows);
    }

    #[test]
    fn cuts_are_nested(rows in point_set(), a in 0.001f64..=1.0, b in 0.001f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p = points(&rows);
        let d = ward_dendrogram(&p, WardVariant::Classical).unwrap();
        let fine = cut_dendrogram(&d, &p, lo).unwrap();
        let coarse = cut_dendrogram(&d, &p, hi).unwrap();
        prop_assert!(fine.k() >= coarse.k());
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                if fine.assignment[i] == fine.assignment[j] {
                    prop_assert_eq!(coarse.assignment[i], coarse.assignment[j]);
                }
            }
        }
    }

    #[test]
    fn relabeling_points_permutes_nothing_but_labels(rows in point_set(), shift in 0usize..40) {
        // the partition itself does not depend on point order
        let n = rows.len();
        let rolled: Vec<Vec<f64>> = (0..n).map(|i| rows[(i + shift) % n].clone()).collect();
        let a = datatailor::clustering::cluster_task(&points(&rows), 0.1, WardVariant::Classical).unwrap();
        let b = datatailor::clustering::cluster_task(&points(&rolled), 0.1, WardVariant::Classical).unwrap();
        prop_assert_eq!(a.k(), b.k());
        for i in 0..n {
            for j in 0..n {
                let same_a = a.assignment[(i + shift) % n] == a.assignment[(j + shift) % n];
                prop_assert_eq!(same_a, b.assignment[i] == b.assignment[j]);
            }
        }
    }
}
