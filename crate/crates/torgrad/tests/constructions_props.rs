use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torgrad::constructions::cheap::{degree0_cheap, integer_towers, is_cheap, supp1_extend, tower_assembly};
use torgrad::constructions::resolutions::ResolutionData;
use torgrad::constructions::rokhlin::{integers_embedding, rokhlin_partition};
use torgrad::crossring::{Carrier, LevelSpace};
use torgrad::groups::Word;
use torgrad::pipeline::{random_carrier, random_strict_complex};

fn q(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn rokhlin_identities(n in 1usize..=10, k in 0usize..40) {
        let m = n + k % (4 * n + 1);
        let t = rokhlin_partition(m, n).unwrap();
        prop_assert!(t.is_partition() && t.shift_identity() && t.disjointness_facts());
        // ⌊M/N⌋ base points and M mod N remainder points
        prop_assert_eq!(t.measure_base(), q(m / n, m));
        prop_assert_eq!(t.measure_remainder(), q(m % n, m));
        if n >= 2 {
            let (_, rep) = integers_embedding(m, n).unwrap();
            let failed: Vec<_> = rep.checks.iter().filter(|c| !c.1).map(|c| c.0.clone()).collect();
            prop_assert!(failed.is_empty(), "{:?}", failed);
            // at M = N the tower wraps around, t^N = e and ∂₁ vanishes
            prop_assert_eq!(rep.norm_d1, BigInt::from(if m > n { 2 } else { 0 }));
            prop_assert_eq!(rep.dim_d0, q(m / n + m % n, m));
        }
    }

    #[test]
    fn supp1_extension_is_well_defined(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (c, res, _) = random_strict_complex(&mut r, 8);
        let level = c.level().clone();
        let deg = r.gen_range(0..res.boundaries.len());
        let lambda = &res.boundaries[deg];
        let targets: Vec<Carrier> = (0..res.ranks[deg]).map(|_| random_carrier(&mut r, level.order(), 0.4)).collect();
        let ext = supp1_extend(&level, lambda, &targets).unwrap();
        prop_assert!(ext.bounds_hold());
        for (i, a) in ext.sources.iter().enumerate() {
            for j in 0..targets.len() {
                let y = ext.morphism.entry(i, j);
                prop_assert_eq!(&y.left_restrict(a), y);
                prop_assert!(y.cols().is_subset(&targets[j]));
            }
        }
    }

    #[test]
    fn degree_zero_cover(m in 2usize..40, inv in 2usize..9) {
        let level = LevelSpace::cyclic(m);
        let eps = q(1, inv);
        let words: Vec<Word> = (0..inv as i64 * 2).map(|k| Word::gen(0).pow(k)).collect();
        if let Ok(c) = degree0_cheap(&level, &words, &eps) {
            prop_assert!(c.achieved < eps);
            prop_assert!(c.complex.is_strict());
            prop_assert!(c.complex.boundary(1).op_norm() <= BigInt::from(2));
            prop_assert!(c.eta.apply(&c.z).iter().all(|v| v.is_one()));
        } else {
            // the greedy cover can only fail when A must exceed ε/2
            prop_assert!(q(m.div_ceil(2 * inv), m) >= eps.clone() / BigInt::from(2));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn dimension_halves_when_the_tile_doubles(n in 2usize..9, k in 2usize..5) {
        let res = ResolutionData::integers();
        let dims = |tile: usize| {
            let m = k * tile;
            let e = tower_assembly(&LevelSpace::cyclic(m), &res, &integer_towers(m, tile).unwrap(), 1).unwrap();
            assert!(e.d.is_strict());
            assert!(e.chain_defects().unwrap().iter().all(|x| *x == BigRational::from(BigInt::from(0))));
            assert!(is_cheap(&e.d, &q(2, tile), &BigInt::from(2)));
            e.d.dims()
        };
        let small = dims(n);
        let big = dims(2 * n);
        prop_assert_eq!(&small[1], &q(1, n));
        for (a, b) in small.iter().zip(&big) {
            prop_assert_eq!(a / BigInt::from(2), b.clone());
        }
    }
}
