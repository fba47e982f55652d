mod oracle;

use datatailor::spectral::{informative_value, lsvr, singular_values};
use datatailor::FeatureMatrix;
use oracle::{entropy, gram_singular_values, random_matrix, ratio, Shape};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check_against_oracle(m: &FeatureMatrix, rank: usize) {
    let got = singular_values(m).unwrap();
    let want = gram_singular_values(m);
    assert_eq!(got.len(), want.len());
    for (g, w) in got.values().iter().zip(&want) {
        assert!((g - w).abs() <= 1e-9, "sigma {g} vs {w}");
    }
    assert_eq!(got.values().iter().filter(|&&s| s > 0.0).count(), rank);
    let inf = informative_value(&got).unwrap();
    assert!((inf - entropy(&want)).abs() <= 1e-7);
    assert!((lsvr(&got).unwrap() - ratio(&want)).abs() <= 1e-9);
    assert!(inf >= 0.0 && inf <= (m.rows() as f64).ln() + 1e-12);
}

#[test]
fn matches_gram_oracle_on_mixed_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for shape in [Shape::Block, Shape::RankOne, Shape::Uniform] {
        for _ in 0..60 {
            let (m, rank) = random_matrix(&mut rng, shape);
            check_against_oracle(&m, rank);
        }
    }
}

#[test]
fn entropy_extremes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let (m, _) = random_matrix(&mut rng, Shape::RankOne);
        let s = singular_values(&m).unwrap();
        assert_eq!(informative_value(&s).unwrap(), 0.0);
        assert_eq!(lsvr(&s).unwrap(), 1.0);

        let (m, l) = random_matrix(&mut rng, Shape::Uniform);
        let s = singular_values(&m).unwrap();
        assert!((informative_value(&s).unwrap() - (l as f64).ln()).abs() < 1e-12);
        assert!((lsvr(&s).unwrap() - 1.0 / l as f64).abs() < 1e-15);
    }
}

fn matrix_strategy() -> impl Strategy<Value = (FeatureMatrix, usize)> {
    (any::<u64>(), 0..3u8).prop_map(|(seed, kind)| {
        let shape = [Shape::Block, Shape::RankOne, Shape::Uniform][kind as usize];
        random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), shape)
    })
}

fn transform(m: &FeatureMatrix, f: impl Fn(usize, usize) -> f32) -> FeatureMatrix {
    let data = (0..m.rows())
        .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
        .map(|(i, j)| f(i, j))
        .collect();
    FeatureMatrix::new(m.rows(), m.cols(), data).unwrap()
}

proptest! {
    #[test]
    fn agrees_with_oracle((m, rank) in matrix_strategy()) {
        check_against_oracle(&m, rank);
    }

    #[test]
    fn scale_invariant((m, _) in matrix_strategy(), e in -6i32..6) {
        let c = 2f32.powi(e);
        let scaled = transform(&m, |i, j| m.row(i)[j] * c);
        let a = singular_values(&m).unwrap();
        let b = singular_values(&scaled).unwrap();
        prop_assert!((informative_value(&a).unwrap() - informative_value(&b).unwrap()).abs() < 1e-9);
        prop_assert!((lsvr(&a).unwrap() - lsvr(&b).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn row_order_does_not_matter((m, _) in matrix_strategy(), shift in 0usize..32) {
        let l = m.rows();
        let rolled = transform(&m, |i, j| m.row((i + shift) % l)[j]);
        let a = singular_values(&m).unwrap();
        let b = singular_values(&rolled).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x));
        }
    }

    #[test]
    fn stacking_a_copy_keeps_entropy((m, _) in matrix_strategy()) {
        let rows = m.rows().min(16);
        let m = FeatureMatrix::new(rows, m.cols(), m.as_slice()[..rows * m.cols()].to_vec()).unwrap();
        prop_assume!(m.as_slice().iter().any(|&x| x != 0.0));
        let mut data = m.as_slice().to_vec();
        data.extend_from_slice(m.as_slice());
        let doubled = FeatureMatrix::new(2 * rows, m.cols(), data).unwrap();
        let a = singular_values(&m).unwrap();
        let b = singular_values(&doubled).unwrap();
        prop_assert!((informative_value(&a).unwrap() - informative_value(&b).unwrap()).abs() < 1e-7);
        prop_assert!((lsvr(&a).unwrap() - lsvr(&b).unwrap()).abs() < 1e-9);
    }
}
