use freecalc::matrix::{
    ampliate, direct_sum, op_norm, op_norm_with, random_gaussian_matrix, random_similarity, random_tuple_with,
    NormMethod,
};
use freecalc::rng::rng_for;
use freecalc::spectral::block_norms;
use freecalc::ComplexMatrix;
use proptest::prelude::*;
use rand::Rng;

mod common;
use common::{blockwise_sum, random_poly, rel};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn submultiplicative(seed in any::<u64>()) {
        let mut rng = rng_for(seed, &[]);
        let (r, k, c) = (rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=6));
        let a = random_gaussian_matrix(r, k, &mut rng);
        let b = random_gaussian_matrix(k, c, &mut rng);
        prop_assert!(op_norm(&(&a * &b)) <= op_norm(&a) * op_norm(&b) + 1e-10);
    }

    #[test]
    fn block_norm_dominates_entries(seed in any::<u64>()) {
        let mut rng = rng_for(seed, &[]);
        let rows: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=3)).collect();
        let cols: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=3)).collect();
        let grid: Vec<Vec<ComplexMatrix>> =
            rows.iter().map(|&r| cols.iter().map(|&c| random_gaussian_matrix(r, c, &mut rng)).collect()).collect();
        let b = block_norms(&grid).unwrap();
        prop_assert!(b.assembled >= b.max_entry - 1e-12);
    }

    #[test]
    fn polynomials_respect_sums_and_similarity(seed in any::<u64>()) {
        let mut rng = rng_for(seed, &[]);
        let d = rng.random_range(1..=3);
        let p = random_poly(d, 4, &mut rng);
        let (na, nb) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let x = random_tuple_with(na, d, 1.0, &mut rng);
        let y = random_tuple_with(nb, d, 1.0, &mut rng);
        let joint = p.eval(&direct_sum(&x, &y).unwrap()).unwrap();
        let split = blockwise_sum(&p.eval(&x).unwrap(), &p.eval(&y).unwrap(), 1, 1, na, nb);
        prop_assert!(rel(&joint, &split) <= 1e-8);
        let s = random_similarity(na, 10.0, &mut rng).unwrap();
        let moved = p.eval(&s.apply(&x).unwrap()).unwrap();
        prop_assert!(rel(&moved, &s.conjugate(&p.eval(&x).unwrap())) <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn ampliation_preserves_norm(seed in any::<u64>()) {
        let mut rng = rng_for(seed, &[]);
        let a = random_gaussian_matrix(rng.random_range(1..=5), rng.random_range(1..=5), &mut rng);
        let n = rng.random_range(1..=4);
        prop_assert!((op_norm(&ampliate(n, &a)) - op_norm(&a)).abs() <= 1e-12);
    }

    #[test]
    fn power_iteration_matches_svd(seed in any::<u64>()) {
        let mut rng = rng_for(seed, &[]);
        let a = random_gaussian_matrix(rng.random_range(1..=8), rng.random_range(1..=8), &mut rng);
        let svd = op_norm_with(&a, NormMethod::Svd);
        let power = op_norm_with(&a, NormMethod::PowerIteration);
        prop_assert!((svd - power).abs() <= 1e-8 * svd.max(1.0));
    }
}
